#include <cstdio>
#include <stdexcept>

#include "cachesage/workload.hpp"

namespace cachesage {

namespace {

// Six-agent supervisor alphabet shared by the four supervisor presets: a
// supervisor entry hub feeding noisy specialist pipelines. The matrices
// differ per preset the way routing differs per task source; the
// tester->planner edge deliberately spans 0.50..0.95 across them.
WorkloadSpec supervisor_base(const std::string& name, std::uint64_t seed) {
    WorkloadSpec spec;
    spec.name = name;
    spec.agents = {
        {"supervisor", 176}, {"planner", 176}, {"researcher", 176},
        {"coder", 176},      {"tester", 160},  {"critic", 160},
    };
    spec.supervisor = 0;
    spec.turns_min = 6;
    spec.turns_max = 14;
    spec.sessions = 100;
    spec.task_tokens = 160;
    spec.history_growth = 8;
    spec.decode_tokens = 32;
    spec.template_tokens = 16;
    spec.concurrency = 4;
    spec.budget_blocks = 120;
    spec.seed = seed;
    return spec;
}

}  // namespace

std::vector<WorkloadSpec> preset_workloads() {
    std::vector<WorkloadSpec> presets;

    {
        WorkloadSpec spec = supervisor_base("supervisor-a", 101);
        spec.task_tokens = 176;  // first-turn phi 0.48
        spec.transition = {
            {0.00, 0.25, 0.25, 0.25, 0.15, 0.10},
            {0.15, 0.00, 0.70, 0.15, 0.00, 0.00},
            {0.15, 0.15, 0.00, 0.70, 0.00, 0.00},
            {0.15, 0.00, 0.00, 0.00, 0.70, 0.15},
            {0.15, 0.55, 0.00, 0.00, 0.00, 0.30},
            {0.60, 0.25, 0.00, 0.15, 0.00, 0.00},
        };
        presets.push_back(std::move(spec));
    }

    {
        WorkloadSpec spec = supervisor_base("supervisor-b", 102);
        spec.task_tokens = 160;  // first-turn phi 0.50
        spec.transition = {
            {0.000, 0.35, 0.15, 0.300, 0.10, 0.10},
            {0.200, 0.00, 0.65, 0.150, 0.00, 0.00},
            {0.200, 0.00, 0.00, 0.650, 0.15, 0.00},
            {0.200, 0.00, 0.00, 0.000, 0.70, 0.10},
            {0.025, 0.95, 0.00, 0.025, 0.00, 0.00},
            {0.650, 0.20, 0.00, 0.000, 0.15, 0.00},
        };
        presets.push_back(std::move(spec));
    }

    {
        WorkloadSpec spec = supervisor_base("supervisor-c", 103);
        spec.agents[0].anchor_tokens = 144;
        spec.task_tokens = 200;  // first-turn phi 0.40
        spec.transition = {
            {0.00, 0.30, 0.30, 0.20, 0.10, 0.10},
            {0.15, 0.00, 0.70, 0.15, 0.00, 0.00},
            {0.15, 0.15, 0.00, 0.70, 0.00, 0.00},
            {0.15, 0.00, 0.15, 0.00, 0.70, 0.00},
            {0.30, 0.70, 0.00, 0.00, 0.00, 0.00},
            {0.65, 0.20, 0.00, 0.00, 0.15, 0.00},
        };
        presets.push_back(std::move(spec));
    }

    {
        WorkloadSpec spec = supervisor_base("supervisor-d", 104);
        spec.agents[0].anchor_tokens = 192;
        spec.task_tokens = 192;  // first-turn phi 0.48
        spec.transition = {
            {0.00, 0.22, 0.22, 0.22, 0.17, 0.17},
            {0.12, 0.00, 0.76, 0.12, 0.00, 0.00},
            {0.12, 0.00, 0.00, 0.76, 0.12, 0.00},
            {0.12, 0.00, 0.00, 0.00, 0.76, 0.12},
            {0.38, 0.50, 0.00, 0.00, 0.00, 0.12},
            {0.55, 0.33, 0.00, 0.12, 0.00, 0.00},
        };
        presets.push_back(std::move(spec));
    }

    {
        // High-structure stress case: a deterministic twelve-agent cycle.
        WorkloadSpec spec;
        spec.name = "synthetic-chain";
        const int n = 12;
        for (int i = 0; i < n; ++i) {
            char label[16];
            std::snprintf(label, sizeof(label), "step-%02d", i + 1);
            spec.agents.push_back({label, 208});
        }
        spec.transition.assign(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i) {
            spec.transition[i][(i + 1) % n] = 1.0;
        }
        spec.supervisor = 0;
        spec.turns_min = 12;
        spec.turns_max = 28;
        spec.sessions = 50;
        spec.task_tokens = 352;  // first-turn phi 0.36
        spec.history_growth = 32;
        spec.decode_tokens = 32;
        spec.template_tokens = 16;
        spec.concurrency = 1;
        spec.budget_blocks = 250;
        spec.seed = 105;
        presets.push_back(std::move(spec));
    }

    for (const WorkloadSpec& spec : presets) {
        spec.validate();
    }
    return presets;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const WorkloadSpec& spec : preset_workloads()) {
        names.push_back(spec.name);
    }
    return names;
}

WorkloadSpec preset_by_name(const std::string& name) {
    std::vector<WorkloadSpec> presets = preset_workloads();
    for (WorkloadSpec& spec : presets) {
        if (spec.name == name) {
            return spec;
        }
    }
    std::string valid;
    for (const std::string& n : preset_names()) {
        valid += valid.empty() ? n : ", " + n;
    }
    throw std::invalid_argument("unknown workload preset '" + name + "' (valid: " + valid + ")");
}

}  // namespace cachesage
