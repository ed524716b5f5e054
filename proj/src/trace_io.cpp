#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cachesage/workload.hpp"

namespace cachesage {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kTraceSchema = "cachesage-trace/v1";

json spec_to_json(const WorkloadSpec& spec) {
    json agents = json::array();
    for (const AgentSpec& a : spec.agents) {
        agents.push_back({{"label", a.label}, {"anchor_tokens", a.anchor_tokens}});
    }
    json row_list = json::array();
    for (const auto& row : spec.transition) {
        row_list.push_back(row);
    }
    json j{{"name", spec.name},
           {"agents", std::move(agents)},
           {"transition", std::move(row_list)},
           {"turns_min", spec.turns_min},
           {"turns_max", spec.turns_max},
           {"sessions", spec.sessions},
           {"task_tokens", spec.task_tokens},
           {"history_growth", spec.history_growth},
           {"decode_tokens", spec.decode_tokens},
           {"template_tokens", spec.template_tokens},
           {"concurrency", spec.concurrency},
           {"budget_blocks", spec.budget_blocks},
           {"seed", spec.seed}};
    if (spec.supervisor) {
        j["supervisor"] = *spec.supervisor;
    }
    return j;
}

WorkloadSpec spec_from_json(const json& j) {
    WorkloadSpec spec;
    spec.name = j.at("name").get<std::string>();
    for (const json& a : j.at("agents")) {
        spec.agents.push_back(
            {a.at("label").get<std::string>(), a.at("anchor_tokens").get<int>()});
    }
    for (const json& row : j.at("transition")) {
        spec.transition.push_back(row.get<std::vector<double>>());
    }
    if (j.contains("supervisor")) {
        spec.supervisor = j.at("supervisor").get<int>();
    }
    spec.turns_min = j.at("turns_min").get<int>();
    spec.turns_max = j.at("turns_max").get<int>();
    spec.sessions = j.at("sessions").get<int>();
    spec.task_tokens = j.at("task_tokens").get<int>();
    spec.history_growth = j.at("history_growth").get<int>();
    spec.decode_tokens = j.at("decode_tokens").get<int>();
    spec.template_tokens = j.at("template_tokens").get<int>();
    spec.concurrency = j.at("concurrency").get<int>();
    spec.budget_blocks = j.at("budget_blocks").get<int>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

}  // namespace

void write_trace_jsonl(const Trace& trace, std::ostream& out) {
    json header{{"schema", kTraceSchema}, {"spec", spec_to_json(trace.spec)}};
    out << header.dump() << '\n';
    for (const Turn& turn : trace.turns) {
        json line{{"session", turn.session_id}, {"turn", turn.turn_index},
                  {"agent", turn.agent},        {"label", trace.spec.agents[turn.agent].label},
                  {"anchor", turn.anchor_tokens}, {"history", turn.history_tokens},
                  {"prompt", turn.prompt_tokens}, {"decode", turn.decode_tokens}};
        out << line.dump() << '\n';
    }
}

Trace read_trace_jsonl(std::istream& in) {
    Trace trace;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error("trace line " + std::to_string(line_no) +
                                     ": " + e.what());
        }
        try {
            if (!have_header) {
                if (!j.contains("schema") || j.at("schema").get<std::string>() != kTraceSchema) {
                    throw std::runtime_error("expected header with schema '" +
                                             std::string(kTraceSchema) + "'");
                }
                trace.spec = spec_from_json(j.at("spec"));
                trace.spec.validate();
                have_header = true;
                continue;
            }
            Turn turn;
            turn.session_id = j.at("session").get<int>();
            turn.turn_index = j.at("turn").get<int>();
            turn.agent = j.at("agent").get<int>();
            turn.anchor_tokens = j.at("anchor").get<long>();
            turn.history_tokens = j.at("history").get<long>();
            turn.prompt_tokens = j.at("prompt").get<long>();
            turn.decode_tokens = j.at("decode").get<int>();
            if (turn.agent < 0 || turn.agent >= static_cast<int>(trace.spec.agents.size())) {
                throw std::runtime_error("agent index out of range");
            }
            trace.turns.push_back(turn);
        } catch (const json::exception& e) {
            throw std::runtime_error("trace line " + std::to_string(line_no) + ": " + e.what());
        } catch (const std::exception& e) {
            throw std::runtime_error("trace line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) {
        throw std::runtime_error("trace line 1: missing header line");
    }
    return trace;
}

}  // namespace cachesage
