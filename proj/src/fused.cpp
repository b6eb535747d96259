#include "concord/fused.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace concord {

namespace {

struct UnionFind {
    std::vector<int> parent;

    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

int FusedGraph::total_positions() const {
    int n = 0;
    for (int l : lengths) n += l;
    return n;
}

FusedGraph build_fused(const std::vector<int>& lengths, const std::vector<LocalClique>& cliques) {
    FusedGraph g;
    g.lengths = lengths;
    std::vector<int> base(lengths.size(), 0);
    int total = 0;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        base[i] = total;
        total += lengths[i];
    }

    UnionFind uf(total);
    auto pos_id = [&](int inst, int pos) { return base[inst] + pos; };
    auto has_self_loop = [&] {
        for (std::size_t i = 0; i < lengths.size(); ++i)
            for (int p = 1; p < lengths[i]; ++p)
                if (uf.find(pos_id(static_cast<int>(i), p - 1)) ==
                    uf.find(pos_id(static_cast<int>(i), p)))
                    return true;
        return false;
    };

    for (int ci = 0; ci < static_cast<int>(cliques.size()); ++ci) {
        const auto& clique = cliques[ci];
        if (clique.empty()) continue;
        const int len = clique.front().end - clique.front().start;
        for (const auto& m : clique) {
            if (m.end - m.start != len) fail("build_fused: clique member span length mismatch");
            if (m.inst < 0 || m.inst >= static_cast<int>(lengths.size()) || m.start < 0 ||
                m.end > lengths[m.inst] || m.start >= m.end)
                fail("build_fused: clique span out of bounds");
        }
        std::vector<int> snapshot = uf.parent;
        for (std::size_t k = 1; k < clique.size(); ++k)
            for (int off = 0; off < len; ++off)
                uf.unite(pos_id(clique[0].inst, clique[0].start + off),
                         pos_id(clique[k].inst, clique[k].start + off));
        if (has_self_loop()) {
            uf.parent = std::move(snapshot);
            g.dropped_cliques.push_back(ci);
        }
    }

    // dense ids in first-occurrence order
    std::vector<int> dense(total, -1);
    int next = 0;
    for (int x = 0; x < total; ++x) {
        int r = uf.find(x);
        if (dense[r] < 0) dense[r] = next++;
    }
    g.node_count = next;
    g.node_origins.resize(next);
    g.pi.resize(lengths.size());
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        g.pi[i].resize(lengths[i]);
        for (int p = 0; p < lengths[i]; ++p) {
            int id = dense[uf.find(pos_id(static_cast<int>(i), p))];
            g.pi[i][p] = id;
            g.node_origins[id].push_back({static_cast<int>(i), p});
        }
    }

    std::map<std::pair<int, int>, int> edge_index;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        for (int p = 1; p < lengths[i]; ++p) {
            int a = g.pi[i][p - 1];
            int b = g.pi[i][p];
            bool flipped = a > b;
            std::pair<int, int> key{std::min(a, b), std::max(a, b)};
            auto it = edge_index.find(key);
            if (it == edge_index.end()) {
                it = edge_index.emplace(key, static_cast<int>(g.edges.size())).first;
                g.edges.push_back({key.first, key.second, {}});
            }
            g.edges[it->second].origins.push_back({static_cast<int>(i), p, flipped});
        }
    }
    return g;
}

bool is_tree(const FusedGraph& graph) {
    UnionFind uf(graph.node_count);
    for (const auto& e : graph.edges) uf.unite(e.a, e.b);
    int components = 0;
    for (int k = 0; k < graph.node_count; ++k)
        if (uf.find(k) == k) ++components;
    return static_cast<int>(graph.edges.size()) == graph.node_count - components;
}

FusedPotentials fused_potentials(const FusedGraph& graph,
                                 const std::vector<ChainPotentials>& chain_pots) {
    FusedPotentials pot;
    const int L = chain_pots.empty() ? 0 : chain_pots.front().num_labels;
    pot.num_labels = L;
    pot.node.assign(graph.node_count, std::vector<double>(L, 0.0));
    pot.edge.assign(graph.edges.size(), std::vector<double>(static_cast<std::size_t>(L) * L, 0.0));
    for (int k = 0; k < graph.node_count; ++k)
        for (const auto& o : graph.node_origins[k])
            for (int y = 0; y < L; ++y) pot.node[k][y] += chain_pots[o.inst].node.at(o.pos, y);
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        auto& table = pot.edge[e];
        for (const auto& o : graph.edges[e].origins) {
            const auto& cp = chain_pots[o.inst];
            for (int ya = 0; ya < L; ++ya)
                for (int yb = 0; yb < L; ++yb)
                    table[static_cast<std::size_t>(ya) * L + yb] +=
                        o.flipped ? cp.edge_at(o.pos, yb, ya) : cp.edge_at(o.pos, ya, yb);
        }
    }
    return pot;
}

namespace {

struct Adjacency {
    // per node: (edge index, neighbor, node is edge endpoint 'a')
    std::vector<std::vector<std::tuple<int, int, bool>>> nbr;

    explicit Adjacency(const FusedGraph& g) : nbr(g.node_count) {
        for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
            nbr[g.edges[e].a].emplace_back(e, g.edges[e].b, true);
            nbr[g.edges[e].b].emplace_back(e, g.edges[e].a, false);
        }
    }
};

inline double edge_pot(const FusedPotentials& pot, int e, bool from_a, int y_from, int y_to) {
    const int L = pot.num_labels;
    return from_a ? pot.edge[e][static_cast<std::size_t>(y_from) * L + y_to]
                  : pot.edge[e][static_cast<std::size_t>(y_to) * L + y_from];
}

double entropy(std::span<const double> p) {
    double h = 0.0;
    for (double x : p)
        if (x > 1e-300) h -= x * std::log(x);
    return h;
}

}  // namespace

FusedMarginals tree_sum_product(const FusedGraph& graph, const FusedPotentials& pot) {
    if (!is_tree(graph)) fail("tree_sum_product called on a cyclic graph");
    const int L = pot.num_labels;
    const int K = graph.node_count;
    Adjacency adj(graph);

    // messages indexed per directed edge: 2*e + (0: a->b, 1: b->a)
    std::vector<std::vector<double>> msg(2 * graph.edges.size(), std::vector<double>(L, 0.0));
    auto msg_index = [&](int e, bool from_a) { return 2 * e + (from_a ? 0 : 1); };

    FusedMarginals out;
    out.exact = true;
    out.node.assign(K, std::vector<double>(L, 0.0));
    out.edge.assign(graph.edges.size(), std::vector<double>(static_cast<std::size_t>(L) * L, 0.0));

    std::vector<int> parent(K, -2), parent_edge(K, -1), order;
    std::vector<bool> seen(K, false);
    std::vector<double> tmp(L);

    for (int root = 0; root < K; ++root) {
        if (seen[root]) continue;
        // BFS component
        order.clear();
        parent[root] = -1;
        seen[root] = true;
        order.push_back(root);
        for (std::size_t qi = 0; qi < order.size(); ++qi) {
            int u = order[qi];
            for (auto [e, v, from_a] : adj.nbr[u]) {
                if (seen[v]) continue;
                seen[v] = true;
                parent[v] = u;
                parent_edge[v] = e;
                order.push_back(v);
            }
        }
        // upward: leaves to root
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            int u = *it;
            if (parent[u] < 0) continue;
            int e = parent_edge[u];
            bool u_is_a = graph.edges[e].a == u;
            std::vector<double> pre(L);
            for (int y = 0; y < L; ++y) {
                pre[y] = pot.node[u][y];
                for (auto [e2, w, from_a2] : adj.nbr[u])
                    if (e2 != e) pre[y] += msg[msg_index(e2, graph.edges[e2].a == w)][y];
            }
            auto& m = msg[msg_index(e, u_is_a)];
            for (int yv = 0; yv < L; ++yv) {
                for (int yu = 0; yu < L; ++yu) tmp[yu] = pre[yu] + edge_pot(pot, e, u_is_a, yu, yv);
                m[yv] = log_sum_exp(tmp);
            }
        }
        // downward: root to leaves
        for (int u : order) {
            if (parent[u] < 0) continue;
            int e = parent_edge[u];
            int par = parent[u];
            bool par_is_a = graph.edges[e].a == par;
            std::vector<double> pre(L);
            for (int y = 0; y < L; ++y) {
                pre[y] = pot.node[par][y];
                for (auto [e2, w, from_a2] : adj.nbr[par])
                    if (e2 != e) pre[y] += msg[msg_index(e2, graph.edges[e2].a == w)][y];
            }
            auto& m = msg[msg_index(e, par_is_a)];
            for (int yu = 0; yu < L; ++yu) {
                for (int yp = 0; yp < L; ++yp) tmp[yp] = pre[yp] + edge_pot(pot, e, par_is_a, yp, yu);
                m[yu] = log_sum_exp(tmp);
            }
        }
        // component partition from the root's belief
        std::vector<double> belief(L);
        for (int y = 0; y < L; ++y) {
            belief[y] = pot.node[root][y];
            for (auto [e, v, from_a] : adj.nbr[root])
                belief[y] += msg[msg_index(e, graph.edges[e].a == v)][y];
        }
        out.log_z += log_sum_exp(belief);
    }

    // node marginals
    for (int u = 0; u < K; ++u) {
        std::vector<double> belief(L);
        for (int y = 0; y < L; ++y) {
            belief[y] = pot.node[u][y];
            for (auto [e, v, from_a] : adj.nbr[u])
                belief[y] += msg[msg_index(e, graph.edges[e].a == v)][y];
        }
        double z = log_sum_exp(belief);
        for (int y = 0; y < L; ++y) out.node[u][y] = std::exp(belief[y] - z);
    }
    // edge marginals
    for (int e = 0; e < static_cast<int>(graph.edges.size()); ++e) {
        int a = graph.edges[e].a, b = graph.edges[e].b;
        std::vector<double> pre_a(L), pre_b(L);
        for (int y = 0; y < L; ++y) {
            pre_a[y] = pot.node[a][y];
            for (auto [e2, w, from_a2] : adj.nbr[a])
                if (e2 != e) pre_a[y] += msg[msg_index(e2, graph.edges[e2].a == w)][y];
            pre_b[y] = pot.node[b][y];
            for (auto [e2, w, from_a2] : adj.nbr[b])
                if (e2 != e) pre_b[y] += msg[msg_index(e2, graph.edges[e2].a == w)][y];
        }
        std::vector<double> joint(static_cast<std::size_t>(L) * L);
        for (int ya = 0; ya < L; ++ya)
            for (int yb = 0; yb < L; ++yb)
                joint[static_cast<std::size_t>(ya) * L + yb] =
                    pre_a[ya] + pre_b[yb] + pot.edge[e][static_cast<std::size_t>(ya) * L + yb];
        double z = log_sum_exp(joint);
        for (std::size_t i = 0; i < joint.size(); ++i) out.edge[e][i] = std::exp(joint[i] - z);
    }
    return out;
}

FusedMarginals loopy_bp(const FusedGraph& graph, const FusedPotentials& pot,
                        const BpConfig& config) {
    const int L = pot.num_labels;
    const int K = graph.node_count;
    Adjacency adj(graph);
    const std::size_t nmsg = 2 * graph.edges.size();
    std::vector<std::vector<double>> msg(nmsg, std::vector<double>(L, 0.0));
    std::vector<std::vector<double>> fresh(nmsg, std::vector<double>(L, 0.0));
    auto msg_index = [&](int e, bool from_a) { return 2 * e + (from_a ? 0 : 1); };

    bool converged = false;
    std::vector<double> tmp(L), pre(L);
    for (int iter = 0; iter < config.max_iters && !converged; ++iter) {
        double delta = 0.0;
        for (int e = 0; e < static_cast<int>(graph.edges.size()); ++e) {
            for (int dir = 0; dir < 2; ++dir) {
                bool from_a = dir == 0;
                int u = from_a ? graph.edges[e].a : graph.edges[e].b;
                for (int y = 0; y < L; ++y) {
                    pre[y] = pot.node[u][y];
                    for (auto [e2, w, from_a2] : adj.nbr[u])
                        if (e2 != e) pre[y] += msg[msg_index(e2, graph.edges[e2].a == w)][y];
                }
                auto& m = fresh[msg_index(e, from_a)];
                for (int yv = 0; yv < L; ++yv) {
                    for (int yu = 0; yu < L; ++yu)
                        tmp[yu] = pre[yu] + edge_pot(pot, e, from_a, yu, yv);
                    m[yv] = log_sum_exp(tmp);
                }
                double norm = log_sum_exp(m);
                for (int yv = 0; yv < L; ++yv) m[yv] -= norm;
            }
        }
        for (std::size_t i = 0; i < nmsg; ++i) {
            for (int y = 0; y < L; ++y) {
                double updated = config.damping * msg[i][y] + (1.0 - config.damping) * fresh[i][y];
                delta = std::max(delta, std::abs(updated - msg[i][y]));
                msg[i][y] = updated;
            }
        }
        converged = delta < config.tol;
    }

    FusedMarginals out;
    out.converged = converged;
    out.exact = converged && is_tree(graph);
    out.node.assign(K, std::vector<double>(L, 0.0));
    out.edge.assign(graph.edges.size(), std::vector<double>(static_cast<std::size_t>(L) * L, 0.0));
    for (int u = 0; u < K; ++u) {
        std::vector<double> belief(L);
        for (int y = 0; y < L; ++y) {
            belief[y] = pot.node[u][y];
            for (auto [e, v, from_a] : adj.nbr[u])
                belief[y] += msg[msg_index(e, graph.edges[e].a == v)][y];
        }
        double z = log_sum_exp(belief);
        for (int y = 0; y < L; ++y) out.node[u][y] = std::exp(belief[y] - z);
    }
    for (int e = 0; e < static_cast<int>(graph.edges.size()); ++e) {
        int a = graph.edges[e].a, b = graph.edges[e].b;
        std::vector<double> pre_a(L), pre_b(L);
        for (int y = 0; y < L; ++y) {
            pre_a[y] = pot.node[a][y];
            for (auto [e2, w, from_a2] : adj.nbr[a])
                if (e2 != e) pre_a[y] += msg[msg_index(e2, graph.edges[e2].a == w)][y];
            pre_b[y] = pot.node[b][y];
            for (auto [e2, w, from_a2] : adj.nbr[b])
                if (e2 != e) pre_b[y] += msg[msg_index(e2, graph.edges[e2].a == w)][y];
        }
        std::vector<double> joint(static_cast<std::size_t>(L) * L);
        for (int ya = 0; ya < L; ++ya)
            for (int yb = 0; yb < L; ++yb)
                joint[static_cast<std::size_t>(ya) * L + yb] =
                    pre_a[ya] + pre_b[yb] + pot.edge[e][static_cast<std::size_t>(ya) * L + yb];
        double z = log_sum_exp(joint);
        for (std::size_t i = 0; i < joint.size(); ++i) out.edge[e][i] = std::exp(joint[i] - z);
    }

    // Bethe free energy with node-degree counting numbers
    double energy = 0.0, ent = 0.0;
    for (int u = 0; u < K; ++u) {
        for (int y = 0; y < L; ++y)
            if (out.node[u][y] > 1e-300) energy += out.node[u][y] * pot.node[u][y];
        ent -= (static_cast<double>(adj.nbr[u].size()) - 1.0) * entropy(out.node[u]);
    }
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        for (std::size_t i = 0; i < out.edge[e].size(); ++i)
            if (out.edge[e][i] > 1e-300) energy += out.edge[e][i] * pot.edge[e][i];
        ent += entropy(out.edge[e]);
    }
    out.log_z = energy + ent;
    return out;
}

std::vector<int> max_product_decode(const FusedGraph& graph, const FusedPotentials& pot,
                                    const BpConfig& config) {
    const int L = pot.num_labels;
    const int K = graph.node_count;
    Adjacency adj(graph);
    std::vector<int> assignment(K, 0);

    if (is_tree(graph)) {
        // exact max-sum with backtracking per component
        std::vector<std::vector<double>> msg(2 * graph.edges.size(), std::vector<double>(L, 0.0));
        auto msg_index = [&](int e, bool from_a) { return 2 * e + (from_a ? 0 : 1); };
        std::vector<int> parent(K, -2), parent_edge(K, -1), order;
        std::vector<bool> seen(K, false);
        for (int root = 0; root < K; ++root) {
            if (seen[root]) continue;
            order.clear();
            parent[root] = -1;
            seen[root] = true;
            order.push_back(root);
            for (std::size_t qi = 0; qi < order.size(); ++qi) {
                int u = order[qi];
                for (auto [e, v, from_a] : adj.nbr[u]) {
                    if (seen[v]) continue;
                    seen[v] = true;
                    parent[v] = u;
                    parent_edge[v] = e;
                    order.push_back(v);
                }
            }
            for (auto it = order.rbegin(); it != order.rend(); ++it) {
                int u = *it;
                if (parent[u] < 0) continue;
                int e = parent_edge[u];
                bool u_is_a = graph.edges[e].a == u;
                std::vector<double> pre(L);
                for (int y = 0; y < L; ++y) {
                    pre[y] = pot.node[u][y];
                    for (auto [e2, w, from_a2] : adj.nbr[u])
                        if (e2 != e) pre[y] += msg[msg_index(e2, graph.edges[e2].a == w)][y];
                }
                auto& m = msg[msg_index(e, u_is_a)];
                for (int yv = 0; yv < L; ++yv) {
                    double best = kNegInf;
                    for (int yu = 0; yu < L; ++yu)
                        best = std::max(best, pre[yu] + edge_pot(pot, e, u_is_a, yu, yv));
                    m[yv] = best;
                }
            }
            // root assignment, then push down
            {
                double best = kNegInf;
                int arg = 0;
                for (int y = 0; y < L; ++y) {
                    double v = pot.node[root][y];
                    for (auto [e, w, from_a] : adj.nbr[root])
                        v += msg[msg_index(e, graph.edges[e].a == w)][y];
                    if (v > best) {
                        best = v;
                        arg = y;
                    }
                }
                assignment[root] = arg;
            }
            for (int u : order) {
                if (parent[u] < 0) continue;
                int e = parent_edge[u];
                bool u_is_a = graph.edges[e].a == u;
                int y_par = assignment[parent[u]];
                double best = kNegInf;
                int arg = 0;
                for (int yu = 0; yu < L; ++yu) {
                    double v = pot.node[u][yu] + edge_pot(pot, e, u_is_a, yu, y_par);
                    for (auto [e2, w, from_a2] : adj.nbr[u])
                        if (e2 != e) v += msg[msg_index(e2, graph.edges[e2].a == w)][yu];
                    if (v > best) {
                        best = v;
                        arg = yu;
                    }
                }
                assignment[u] = arg;
            }
        }
        return assignment;
    }

    // loopy damped max-product, per-node argmax of max-beliefs
    const std::size_t nmsg = 2 * graph.edges.size();
    std::vector<std::vector<double>> msg(nmsg, std::vector<double>(L, 0.0));
    std::vector<std::vector<double>> fresh(nmsg, std::vector<double>(L, 0.0));
    auto msg_index = [&](int e, bool from_a) { return 2 * e + (from_a ? 0 : 1); };
    std::vector<double> pre(L);
    for (int iter = 0; iter < config.max_iters; ++iter) {
        double delta = 0.0;
        for (int e = 0; e < static_cast<int>(graph.edges.size()); ++e) {
            for (int dir = 0; dir < 2; ++dir) {
                bool from_a = dir == 0;
                int u = from_a ? graph.edges[e].a : graph.edges[e].b;
                for (int y = 0; y < L; ++y) {
                    pre[y] = pot.node[u][y];
                    for (auto [e2, w, from_a2] : adj.nbr[u])
                        if (e2 != e) pre[y] += msg[msg_index(e2, graph.edges[e2].a == w)][y];
                }
                auto& m = fresh[msg_index(e, from_a)];
                double norm = kNegInf;
                for (int yv = 0; yv < L; ++yv) {
                    double best = kNegInf;
                    for (int yu = 0; yu < L; ++yu)
                        best = std::max(best, pre[yu] + edge_pot(pot, e, from_a, yu, yv));
                    m[yv] = best;
                    norm = std::max(norm, best);
                }
                for (int yv = 0; yv < L; ++yv) m[yv] -= norm;
            }
        }
        for (std::size_t i = 0; i < nmsg; ++i) {
            for (int y = 0; y < L; ++y) {
                double updated = config.damping * msg[i][y] + (1.0 - config.damping) * fresh[i][y];
                delta = std::max(delta, std::abs(updated - msg[i][y]));
                msg[i][y] = updated;
            }
        }
        if (delta < config.tol) break;
    }
    for (int u = 0; u < K; ++u) {
        double best = kNegInf;
        int arg = 0;
        for (int y = 0; y < L; ++y) {
            double v = pot.node[u][y];
            for (auto [e, w, from_a] : adj.nbr[u])
                v += msg[msg_index(e, graph.edges[e].a == w)][y];
            if (v > best) {
                best = v;
                arg = y;
            }
        }
        assignment[u] = arg;
    }
    return assignment;
}

FusedMarginals trw_one_step(const FusedGraph& graph,
                            const std::vector<ChainPotentials>& chain_pots) {
    const int L = chain_pots.empty() ? 0 : chain_pots.front().num_labels;
    FusedPotentials agg = fused_potentials(graph, chain_pots);

    FusedMarginals out;
    out.exact = false;
    out.converged = true;
    out.node.assign(graph.node_count, std::vector<double>(L, 0.0));
    out.edge.assign(graph.edges.size(), std::vector<double>(static_cast<std::size_t>(L) * L, 0.0));

    // Split chain potentials: every origin component receives the fused
    // table divided by the number of origins collapsed onto it.
    std::vector<ChainPotentials> split;
    split.reserve(chain_pots.size());
    for (std::size_t i = 0; i < chain_pots.size(); ++i)
        split.emplace_back(graph.lengths[i], L);
    for (int k = 0; k < graph.node_count; ++k) {
        const double m = static_cast<double>(graph.node_origins[k].size());
        for (const auto& o : graph.node_origins[k])
            for (int y = 0; y < L; ++y) split[o.inst].node.at(o.pos, y) = agg.node[k][y] / m;
    }
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        const double m = static_cast<double>(graph.edges[e].origins.size());
        for (const auto& o : graph.edges[e].origins) {
            for (int ya = 0; ya < L; ++ya)
                for (int yb = 0; yb < L; ++yb) {
                    double v = agg.edge[e][static_cast<std::size_t>(ya) * L + yb] / m;
                    if (o.flipped)
                        split[o.inst].edge_at(o.pos, yb, ya) = v;
                    else
                        split[o.inst].edge_at(o.pos, ya, yb) = v;
                }
        }
    }

    std::vector<ChainMarginals> margs(split.size());
    for (std::size_t i = 0; i < split.size(); ++i) {
        margs[i] = forward_backward(split[i]);
        out.log_z += margs[i].log_z;
        for (int p = 0; p < graph.lengths[i]; ++p) {
            int k = graph.pi[i][p];
            const double mult = static_cast<double>(graph.node_origins[k].size());
            for (int y = 0; y < L; ++y) out.node[k][y] += margs[i].node.at(p, y) / mult;
        }
    }
    // edge marginals: average the split-chain edge marginals over origins
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        const double mult = static_cast<double>(graph.edges[e].origins.size());
        for (const auto& o : graph.edges[e].origins) {
            const auto& m = margs[o.inst];
            for (int ya = 0; ya < L; ++ya)
                for (int yb = 0; yb < L; ++yb) {
                    double v = o.flipped ? m.edge_at(o.pos, yb, ya, L) : m.edge_at(o.pos, ya, yb, L);
                    out.edge[e][static_cast<std::size_t>(ya) * L + yb] += v / mult;
                }
        }
    }
    return out;
}

std::string to_dot(const FusedGraph& graph) {
    std::ostringstream os;
    os << "graph fused {\n";
    for (int k = 0; k < graph.node_count; ++k) {
        os << "  n" << k << " [label=\"";
        for (std::size_t i = 0; i < graph.node_origins[k].size(); ++i) {
            if (i) os << "\\n";
            os << graph.node_origins[k][i].inst << ":" << graph.node_origins[k][i].pos;
        }
        os << "\"];\n";
    }
    for (const auto& e : graph.edges)
        os << "  n" << e.a << " -- n" << e.b << " [label=\"" << e.origins.size() << "\"];\n";
    os << "}\n";
    return os.str();
}

}  // namespace concord
