#pragma once

// JSON configuration for the synthetic benchmark: a task spec plus optional
// experiment protocol overrides, all fields defaulted from the built-ins.

#include <string>

#include <json.hpp>

#include "seqcal/core.hpp"
#include "seqcal/synth.hpp"

namespace seqcal {

struct SynthRunConfig {
  SynthTaskSpec spec;
  ExperimentProtocol protocol;
};

namespace detail {

template <typename T>
void maybe_get(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline SynthRunConfig synth_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad synth spec: ") + e.what());
  }

  SynthRunConfig config;
  config.spec = default_task_spec();
  try {
    // A spec that changes the task geometry should not silently keep the
    // default confusability, so rules/transition reset whenever k changes.
    if (j.contains("k") && j.at("k").get<int>() != config.spec.k) {
      config.spec = SynthTaskSpec{};
      config.spec.k = j.at("k").get<int>();
    }
    detail::maybe_get(j, "base_noise", config.spec.base_noise);
    detail::maybe_get(j, "min_len", config.spec.min_len);
    detail::maybe_get(j, "max_len", config.spec.max_len);
    detail::maybe_get(j, "train_count", config.spec.train_count);
    detail::maybe_get(j, "support_count", config.spec.support_count);
    detail::maybe_get(j, "test_count", config.spec.test_count);
    detail::maybe_get(j, "seed", config.spec.seed);
    detail::maybe_get(j, "transition", config.spec.transition);
    if (j.contains("rules")) {
      config.spec.rules.clear();
      for (const auto& r : j.at("rules")) {
        CorruptionRule rule;
        rule.context = r.value("context", kAnyContext);
        rule.cls = r.at("class").get<ClassId>();
        rule.rate = r.at("rate").get<double>();
        rule.replacement = r.at("replacement").get<ClassId>();
        config.spec.rules.push_back(rule);
      }
    }

    if (j.contains("protocol")) {
      const auto& p = j.at("protocol");
      detail::maybe_get(p, "train_epochs", config.protocol.train_epochs);
      detail::maybe_get(p, "train_lr", config.protocol.train_lr);
      detail::maybe_get(p, "finetune_epochs", config.protocol.finetune_epochs);
      detail::maybe_get(p, "finetune_lr", config.protocol.finetune_lr);
      detail::maybe_get(p, "threshold", config.protocol.threshold);
      detail::maybe_get(p, "ls_alpha", config.protocol.ls_alpha);
      detail::maybe_get(p, "alpha_prime", config.protocol.alpha_prime);
      detail::maybe_get(p, "adaptive", config.protocol.adaptive);
      detail::maybe_get(p, "bins", config.protocol.bins);
      if (p.contains("normalization")) {
        const std::string mode = p.at("normalization").get<std::string>();
        if (mode == "renormalized")
          config.protocol.normalization = Normalization::Renormalized;
        else if (mode == "aswritten")
          config.protocol.normalization = Normalization::AsWritten;
        else
          throw Error(ErrorCode::ParseError, "normalization must be renormalized or aswritten");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad synth spec field: ") + e.what());
  }
  config.spec.validate();
  return config;
}

}  // namespace seqcal
