#include "cachesage/transition_learner.hpp"

#include <algorithm>
#include <stdexcept>

#include "cachesage/hashing.hpp"

namespace cachesage {

TransitionLearner::TransitionLearner(std::size_t window_capacity) : capacity_(window_capacity) {
    if (capacity_ == 0) {
        throw std::invalid_argument("TransitionLearner: window capacity must be positive");
    }
}

void TransitionLearner::note_agent(AgentId agent) {
    if (alphabet_set_.insert(agent).second) {
        alphabet_.push_back(agent);
    }
}

void TransitionLearner::record(AgentId prev, AgentId next) {
    note_agent(prev);
    note_agent(next);
    window_.emplace_back(prev, next);
    ++recorded_;
    auto& cell = counts_[prev][next];
    if (cell == 0) {
        ++nonzero_pairs_;
    }
    ++cell;
    ++row_totals_[prev];

    if (window_.size() > capacity_) {
        const auto [a, b] = window_.front();
        window_.pop_front();
        auto row_it = counts_.find(a);
        auto cell_it = row_it->second.find(b);
        if (--cell_it->second == 0) {
            row_it->second.erase(cell_it);
            --nonzero_pairs_;
        }
        if (row_it->second.empty()) {
            counts_.erase(row_it);
        }
        auto total_it = row_totals_.find(a);
        if (--total_it->second == 0) {
            row_totals_.erase(total_it);
        }
    }
}

double TransitionLearner::prob(AgentId a, AgentId b) const {
    const auto total_it = row_totals_.find(a);
    if (total_it == row_totals_.end() || total_it->second == 0) {
        return 0.0;
    }
    const auto row_it = counts_.find(a);
    if (row_it == counts_.end()) {
        return 0.0;
    }
    const auto cell_it = row_it->second.find(b);
    if (cell_it == row_it->second.end()) {
        return 0.0;
    }
    return static_cast<double>(cell_it->second) / static_cast<double>(total_it->second);
}

std::uint64_t TransitionLearner::row_total(AgentId a) const {
    const auto it = row_totals_.find(a);
    return it == row_totals_.end() ? 0 : it->second;
}

const std::unordered_map<AgentId, std::uint64_t>* TransitionLearner::row(AgentId a) const {
    const auto it = counts_.find(a);
    return it == counts_.end() ? nullptr : &it->second;
}

std::optional<std::pair<AgentId, double>> TransitionLearner::argmax_row(AgentId a) const {
    const auto* r = row(a);
    const std::uint64_t total = row_total(a);
    if (!r || total == 0) {
        return std::nullopt;
    }
    AgentId best;
    std::uint64_t best_count = 0;
    bool first = true;
    for (const auto& [next, count] : *r) {
        if (first || count > best_count || (count == best_count && next < best)) {
            best = next;
            best_count = count;
            first = false;
        }
    }
    return std::make_pair(best, static_cast<double>(best_count) / static_cast<double>(total));
}

std::size_t TransitionLearner::state_bytes() const {
    std::size_t bytes = 0;
    bytes += window_.size() * 4;        // (u16 prev_idx, u16 next_idx) per entry
    bytes += nonzero_pairs_ * 12;       // (u16, u16, u64 count)
    bytes += row_totals_.size() * 10;   // (u16, u64)
    bytes += alphabet_.size() * 8;      // agent id table
    bytes += 8;                         // window capacity
    return bytes;
}

json TransitionLearner::to_json() const {
    json rows = json::object();
    std::vector<AgentId> sorted_rows;
    sorted_rows.reserve(counts_.size());
    for (const auto& [a, _] : counts_) {
        sorted_rows.push_back(a);
    }
    std::sort(sorted_rows.begin(), sorted_rows.end());
    for (AgentId a : sorted_rows) {
        json row = json::object();
        std::vector<AgentId> sorted_cols;
        for (const auto& [b, _] : counts_.at(a)) {
            sorted_cols.push_back(b);
        }
        std::sort(sorted_cols.begin(), sorted_cols.end());
        for (AgentId b : sorted_cols) {
            row[to_hex(b.value)] = counts_.at(a).at(b);
        }
        rows[to_hex(a.value)] = std::move(row);
    }

    json window = json::array();
    for (const auto& [a, b] : window_) {
        window.push_back({to_hex(a.value), to_hex(b.value)});
    }

    json alphabet = json::array();
    for (AgentId a : alphabet_) {
        alphabet.push_back(to_hex(a.value));
    }

    return json{{"window_capacity", capacity_},
                {"transitions_recorded", recorded_},
                {"alphabet", std::move(alphabet)},
                {"rows", std::move(rows)},
                {"window", std::move(window)}};
}

}  // namespace cachesage
