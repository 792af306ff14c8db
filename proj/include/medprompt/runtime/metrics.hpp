#pragma once

#include "medprompt/evolution.hpp"

#include <string>
#include <vector>

namespace medprompt {

/// Render the stats CSV (schema: g,best_F,mean_F,sigma_F,p_m,stopped_early).
/// Deterministic formatting; the schema line is frozen by a golden test.
std::string stats_csv(const std::vector<GenerationStats>& history);

inline constexpr const char* kStatsCsvHeader = "g,best_F,mean_F,sigma_F,p_m,stopped_early";

/// Append-only JSONL event stream writer. Events carry a sequence number and
/// deterministic payloads only (no timestamps).
class EventLog {
  public:
    explicit EventLog(const std::string& path);
    ~EventLog();

    void emit(const std::string& type, const std::string& payload_json);

  private:
    struct Impl;
    Impl* impl_;
};

} // namespace medprompt
