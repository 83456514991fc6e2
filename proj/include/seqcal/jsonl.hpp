#pragma once

// JSONL prediction-log format, one record per line:
//   {"id": str, "ref": [int], "pred": [int], "conf": [float]}    scalar mode
//   {"id": str, "ref": [int], "pred": [int], "dists": [[float]]} full mode
// Fields may appear in any order; unknown fields are ignored.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqcal/core.hpp"

namespace seqcal {

inline PredictionRecord parse_record(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad JSONL line: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "JSONL line is not an object");

  PredictionRecord record;
  try {
    record.id = j.at("id").get<std::string>();
    record.reference = j.at("ref").get<std::vector<ClassId>>();
    record.predicted = j.at("pred").get<std::vector<ClassId>>();
    if (j.contains("dists")) {
      record.mode = ConfidenceMode::Full;
      for (const auto& row : j.at("dists"))
        record.dists.push_back(TokenDistribution{row.get<std::vector<double>>()});
    } else if (j.contains("conf")) {
      record.mode = ConfidenceMode::Scalar;
      record.confidences = j.at("conf").get<std::vector<double>>();
    } else {
      throw Error(ErrorCode::ParseError, "record '" + record.id + "' has neither conf nor dists");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad record field: ") + e.what());
  }
  return record;
}

// Serializes with round-trip double precision so parsing the line back
// yields a structurally equal record.
inline std::string record_to_jsonl(const PredictionRecord& record) {
  nlohmann::ordered_json j;
  j["id"] = record.id;
  j["ref"] = record.reference;
  j["pred"] = record.predicted;
  if (record.full_mode()) {
    auto rows = nlohmann::ordered_json::array();
    for (const auto& dist : record.dists) rows.push_back(dist.probs);
    j["dists"] = std::move(rows);
  } else {
    j["conf"] = record.confidences;
  }
  return j.dump();
}

inline std::vector<PredictionRecord> parse_records(std::istream& in) {
  std::vector<PredictionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(parse_record(line));
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

inline std::vector<PredictionRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open prediction log: " + path);
  return parse_records(in);
}

inline void write_records(std::ostream& out, const std::vector<PredictionRecord>& records) {
  for (const auto& record : records) out << record_to_jsonl(record) << '\n';
}

}  // namespace seqcal
