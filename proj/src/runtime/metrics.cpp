#include "medprompt/runtime/metrics.hpp"

#include "medprompt/errors.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>

namespace medprompt {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace

std::string stats_csv(const std::vector<GenerationStats>& history) {
    std::string out = kStatsCsvHeader;
    out.push_back('\n');
    for (const auto& s : history) {
        out += std::to_string(s.generation);
        out.push_back(',');
        out += format_double(s.best_f);
        out.push_back(',');
        out += format_double(s.mean_f);
        out.push_back(',');
        out += format_double(s.sigma_f);
        out.push_back(',');
        out += format_double(s.mutation_probability);
        out.push_back(',');
        out += s.stopped_early ? '1' : '0';
        out.push_back('\n');
    }
    return out;
}

struct EventLog::Impl {
    std::ofstream out;
    std::size_t seq = 0;
};

EventLog::EventLog(const std::string& path) : impl_(new Impl) {
    impl_->out.open(path, std::ios::binary | std::ios::app);
    if (!impl_->out)
        throw Error("cannot open event log: " + path);
}

EventLog::~EventLog() { delete impl_; }

void EventLog::emit(const std::string& type, const std::string& payload_json) {
    nlohmann::json doc;
    doc["seq"] = impl_->seq++;
    doc["type"] = type;
    doc["data"] = nlohmann::json::parse(payload_json);
    impl_->out << doc.dump() << '\n';
    impl_->out.flush();
}

} // namespace medprompt
