#pragma once

// Dataset/environment graphs and exact geodesics. Nodes are distinct states
// (canonical feature keys); edges join states co-occurring in a transition and
// are symmetrized, justified by the inverse-action assumption (the env
// module's inverse_action_check reports where that assumption is a lie).
//
// A synthetic meta node can be attached to every termination state to restore
// single-component connectivity. Geodesic queries exclude paths through the
// meta node unless explicitly asked, so it cannot create fake shortcuts.

#include <algorithm>
#include <deque>
#include <limits>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "metricrl/env.hpp"
#include "metricrl/errors.hpp"
#include "metricrl/matrix.hpp"
#include "metricrl/rng.hpp"
#include "metricrl/textio.hpp"

namespace metricrl {

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

struct DatasetGraph {
    std::vector<std::string> keys;       // node id -> canonical key
    std::vector<Vector> features;        // node id -> feature vector
    std::unordered_map<std::string, int> index;
    std::vector<std::vector<int>> adjacency;
    int meta_node = -1;

    int node_count() const { return static_cast<int>(keys.size()); }

    int find(const std::string& key) const {
        auto it = index.find(key);
        return it == index.end() ? -1 : it->second;
    }

    int add_node(const Vector& f) {
        const std::string key = feature_key(f);
        auto it = index.find(key);
        if (it != index.end()) return it->second;
        const int id = node_count();
        index.emplace(key, id);
        keys.push_back(key);
        features.push_back(f);
        adjacency.emplace_back();
        return id;
    }

    void add_edge(int a, int b) {
        if (a == b) return;
        auto insert_sorted = [](std::vector<int>& v, int x) {
            auto it = std::lower_bound(v.begin(), v.end(), x);
            if (it == v.end() || *it != x) v.insert(it, x);
        };
        insert_sorted(adjacency[a], b);
        insert_sorted(adjacency[b], a);
    }

    // Component labels; the meta node (if any) is skipped so the labels
    // describe the raw data graph.
    std::vector<int> component_labels() const {
        std::vector<int> label(keys.size(), -1);
        int next = 0;
        for (int s = 0; s < node_count(); ++s) {
            if (s == meta_node || label[s] >= 0) continue;
            std::deque<int> q{s};
            label[s] = next;
            while (!q.empty()) {
                const int u = q.front();
                q.pop_front();
                for (int v : adjacency[u]) {
                    if (v == meta_node || label[v] >= 0) continue;
                    label[v] = next;
                    q.push_back(v);
                }
            }
            ++next;
        }
        return label;
    }

    int component_count() const {
        const auto labels = component_labels();
        int count = 0;
        for (int l : labels) count = std::max(count, l + 1);
        return count;
    }

    // BFS distances from source. through_meta controls whether paths may use
    // the meta node as an intermediate hop.
    std::vector<int> geodesics_from(int source, bool through_meta = false) const {
        if (source < 0 || source >= node_count())
            throw UsageError("geodesics_from: unknown source node");
        std::vector<int> dist(keys.size(), kUnreachable);
        std::deque<int> q{source};
        dist[source] = 0;
        while (!q.empty()) {
            const int u = q.front();
            q.pop_front();
            if (!through_meta && u == meta_node && u != source) continue;
            for (int v : adjacency[u]) {
                if (dist[v] != kUnreachable) continue;
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
        return dist;
    }

    std::string adjacency_text() const {
        std::string out;
        for (int i = 0; i < node_count(); ++i) {
            out += std::to_string(i);
            out += '\t';
            out += (i == meta_node) ? "<meta>" : keys[i];
            out += '\t';
            for (std::size_t j = 0; j < adjacency[i].size(); ++j) {
                if (j) out += ' ';
                out += std::to_string(adjacency[i][j]);
            }
            out += '\n';
        }
        return out;
    }
};

// Graph over observed transitions (dataset mode).
inline DatasetGraph build_transition_graph(const std::vector<std::pair<Vector, Vector>>& transitions) {
    if (transitions.empty()) throw UsageError("build_transition_graph: empty input");
    DatasetGraph g;
    for (const auto& [s, next] : transitions) {
        const int a = g.add_node(s);
        const int b = g.add_node(next);
        g.add_edge(a, b);
    }
    return g;
}

// Graph over all reachable states of an environment.
inline DatasetGraph build_state_graph(const DiscreteEnv& env) {
    DatasetGraph g;
    const auto states = env.enumerate_states();
    if (states.empty()) throw UsageError("build_state_graph: env has no states");
    for (const auto& s : states) g.add_node(env.encode(s));
    for (const auto& s : states) {
        const int a_id = g.find(env.state_key(s));
        for (int a = 0; a < env.action_count(); ++a) {
            const EnvState nxt = env.transition(s, a).next;
            g.add_edge(a_id, g.find(env.state_key(nxt)));
        }
    }
    return g;
}

// Attaches one synthetic node adjacent to every listed termination state.
// Fails if the graph still has more than one component afterwards, naming a
// representative state of each orphan component.
inline void add_meta_state(DatasetGraph& g, const std::vector<Vector>& terminal_states) {
    if (g.meta_node >= 0) throw UsageError("add_meta_state: graph already has a meta node");
    if (terminal_states.empty() && g.component_count() > 1)
        throw UsageError("add_meta_state: terminal-state list is empty but graph is disconnected");
    const int meta = g.add_node(meta_state_features(
        terminal_states.empty() ? static_cast<int>(g.features.front().size())
                                : static_cast<int>(terminal_states.front().size())));
    g.meta_node = meta;
    for (const auto& t : terminal_states) {
        const int id = g.find(feature_key(t));
        if (id < 0) throw DataError("add_meta_state: terminal state not in graph: " + feature_key(t));
        g.add_edge(meta, id);
    }
    // Connectivity check through the meta node.
    std::vector<int> dist = g.geodesics_from(meta, true);
    const auto labels = g.component_labels();
    std::vector<int> orphan_component;
    std::unordered_set<int> seen;
    for (int i = 0; i < g.node_count(); ++i) {
        if (i == meta) continue;
        if (dist[i] == kUnreachable && seen.insert(labels[i]).second) orphan_component.push_back(i);
    }
    if (!orphan_component.empty()) {
        std::string msg = "add_meta_state: graph still disconnected; orphan components with no "
                          "terminal state, e.g.";
        for (int rep : orphan_component) msg += " {" + g.keys[rep] + "}";
        throw DataError(msg);
    }
}

// Memoizing per-source BFS table.
class GeodesicCache {
  public:
    explicit GeodesicCache(const DatasetGraph& g, bool through_meta = false)
        : graph_(g), through_meta_(through_meta) {}

    const std::vector<int>& from(int source) const {
        auto it = rows_.find(source);
        if (it != rows_.end()) return it->second;
        auto [ins, ok] = rows_.emplace(source, graph_.geodesics_from(source, through_meta_));
        (void)ok;
        return ins->second;
    }

    int distance(int a, int b) const { return from(a)[b]; }

    const DatasetGraph& graph() const { return graph_; }

  private:
    const DatasetGraph& graph_;
    bool through_meta_;
    mutable std::unordered_map<int, std::vector<int>> rows_;
};

struct MetricAxiomReport {
    bool ok = true;
    std::int64_t triples_checked = 0;
    std::string detail;
};

// Identity, symmetry and triangle inequality on random triples.
inline MetricAxiomReport check_metric_axioms(const DatasetGraph& g, std::int64_t trials, Rng rng) {
    MetricAxiomReport report;
    GeodesicCache cache(g);
    const int n = g.node_count();
    if (n == 0) return report;
    for (std::int64_t t = 0; t < trials; ++t) {
        const int a = rng.below_int(n);
        const int b = rng.below_int(n);
        const int c = rng.below_int(n);
        const int dab = cache.distance(a, b);
        const int dba = cache.distance(b, a);
        const int dac = cache.distance(a, c);
        const int dbc = cache.distance(b, c);
        if (cache.distance(a, a) != 0) {
            report.ok = false;
            report.detail = "identity failed at node " + std::to_string(a);
            return report;
        }
        if (dab != dba) {
            report.ok = false;
            report.detail = "symmetry failed for (" + std::to_string(a) + "," + std::to_string(b) + ")";
            return report;
        }
        if (dab != kUnreachable && dbc != kUnreachable && dac != kUnreachable &&
            dac > dab + dbc) {
            report.ok = false;
            report.detail = "triangle inequality failed for (" + std::to_string(a) + "," +
                            std::to_string(b) + "," + std::to_string(c) + ")";
            return report;
        }
        ++report.triples_checked;
    }
    return report;
}

}  // namespace metricrl
