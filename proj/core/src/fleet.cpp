#include "goldrank/fleet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <ostream>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "internal_util.hpp"

namespace goldrank::fleet {

BuildMatrixResult build_matrix(
    const std::vector<std::pair<std::string, std::vector<rank::GoldenRankRecord>>>&
        runs) {
    if (runs.empty()) throw std::invalid_argument("no runs to build a matrix from");

    std::vector<std::unordered_map<std::string, int>> by_id(runs.size());
    for (std::size_t r = 0; r < runs.size(); ++r)
        for (const auto& rec : runs[r].second)
            by_id[r].emplace(rec.example_id, rec.gr);

    // Ids present in every run, in sorted order for reproducibility.
    std::set<std::string> universe;
    for (const auto& m : by_id)
        for (const auto& [id, gr] : m) universe.insert(id);

    BuildMatrixResult result;
    for (const auto& [name, records] : runs)
        result.matrix.experiments.push_back(name);
    for (const std::string& id : universe) {
        const bool everywhere = std::all_of(
            by_id.begin(), by_id.end(),
            [&](const auto& m) { return m.find(id) != m.end(); });
        if (everywhere)
            result.matrix.example_ids.push_back(id);
        else
            result.excluded_ids.push_back(id);
    }
    if (result.matrix.example_ids.empty())
        throw std::runtime_error("runs share no example ids");

    result.matrix.values.reserve(result.matrix.example_ids.size() * runs.size());
    for (const std::string& id : result.matrix.example_ids)
        for (const auto& m : by_id)
            result.matrix.values.push_back(m.at(id));
    return result;
}

std::vector<ExampleStats> example_stats(const GrMatrix& m,
                                        const corpus::Dataset& dataset) {
    const auto index = corpus::index_by_id(dataset);
    const std::size_t n_exp = m.n_experiments();
    std::vector<ExampleStats> stats;
    stats.reserve(m.n_examples());
    for (std::size_t row = 0; row < m.n_examples(); ++row) {
        auto it = index.find(m.example_ids[row]);
        if (it == index.end())
            throw std::runtime_error("matrix id \"" + m.example_ids[row] +
                                     "\" is not in the dataset");
        double sum = 0.0, sq = 0.0;
        for (std::size_t col = 0; col < n_exp; ++col) {
            const double v = m.at(row, col);
            sum += v;
            sq += v * v;
        }
        const double mean = sum / n_exp;
        const double variance = std::max(0.0, sq / n_exp - mean * mean);
        stats.push_back({m.example_ids[row], mean, std::sqrt(variance),
                         !dataset.examples[it->second].is_impossible});
    }
    return stats;
}

namespace {

double squared_distance(const std::vector<double>& a,
                        const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

// Clustering feature: point count, linear sum, and scalar squared sum.
struct Feature {
    std::int64_t n = 0;
    std::vector<double> ls;
    double ss = 0.0;

    void add_point(const std::vector<double>& p) {
        if (ls.empty()) ls.assign(p.size(), 0.0);
        ++n;
        for (std::size_t i = 0; i < p.size(); ++i) {
            ls[i] += p[i];
            ss += p[i] * p[i];
        }
    }
    void merge(const Feature& o) {
        if (ls.empty()) ls.assign(o.ls.size(), 0.0);
        n += o.n;
        for (std::size_t i = 0; i < o.ls.size(); ++i) ls[i] += o.ls[i];
        ss += o.ss;
    }
    std::vector<double> centroid() const {
        std::vector<double> c(ls.size());
        for (std::size_t i = 0; i < ls.size(); ++i) c[i] = ls[i] / n;
        return c;
    }
    // Root mean squared distance of members from the centroid.
    double radius() const {
        double norm_sq = 0.0;
        for (double v : ls) norm_sq += (v / n) * (v / n);
        return std::sqrt(std::max(0.0, ss / n - norm_sq));
    }
};

struct Node {
    bool leaf = true;
    std::vector<Feature> entries;
    std::vector<std::unique_ptr<Node>> children;  // internal nodes only
};

std::size_t nearest_entry(const Node& node, const std::vector<double>& p) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < node.entries.size(); ++i) {
        const double d = squared_distance(node.entries[i].centroid(), p);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

// Splits an overflowing node: the two entries farthest apart seed the halves,
// every other entry joins the nearer seed.
std::pair<std::unique_ptr<Node>, std::unique_ptr<Node>> split_node(Node& node) {
    std::size_t seed_a = 0, seed_b = 1;
    double worst = -1.0;
    std::vector<std::vector<double>> centroids(node.entries.size());
    for (std::size_t i = 0; i < node.entries.size(); ++i)
        centroids[i] = node.entries[i].centroid();
    for (std::size_t i = 0; i < node.entries.size(); ++i)
        for (std::size_t j = i + 1; j < node.entries.size(); ++j) {
            const double d = squared_distance(centroids[i], centroids[j]);
            if (d > worst) {
                worst = d;
                seed_a = i;
                seed_b = j;
            }
        }
    auto left = std::make_unique<Node>();
    auto right = std::make_unique<Node>();
    left->leaf = right->leaf = node.leaf;
    for (std::size_t i = 0; i < node.entries.size(); ++i) {
        const double da = squared_distance(centroids[i], centroids[seed_a]);
        const double db = squared_distance(centroids[i], centroids[seed_b]);
        Node& target = (db < da) ? *right : *left;
        target.entries.push_back(std::move(node.entries[i]));
        if (!node.leaf) target.children.push_back(std::move(node.children[i]));
    }
    return {std::move(left), std::move(right)};
}

class CfTree {
public:
    CfTree(double threshold, std::size_t branching)
        : threshold_(threshold), branching_(branching),
          root_(std::make_unique<Node>()) {}

    void insert(const std::vector<double>& p) {
        if (insert_into(*root_, p)) {
            auto [left, right] = split_node(*root_);
            auto new_root = std::make_unique<Node>();
            new_root->leaf = false;
            new_root->entries.push_back(sum_of(*left));
            new_root->entries.push_back(sum_of(*right));
            new_root->children.push_back(std::move(left));
            new_root->children.push_back(std::move(right));
            root_ = std::move(new_root);
        }
    }

    std::vector<Feature> leaf_subclusters() const {
        std::vector<Feature> out;
        collect(*root_, out);
        return out;
    }

private:
    static Feature sum_of(const Node& node) {
        Feature f;
        for (const Feature& e : node.entries) f.merge(e);
        return f;
    }

    // Returns true when `node` overflowed and must be split by the caller.
    bool insert_into(Node& node, const std::vector<double>& p) {
        if (node.leaf) {
            if (!node.entries.empty()) {
                const std::size_t i = nearest_entry(node, p);
                Feature trial = node.entries[i];
                trial.add_point(p);
                if (trial.radius() <= threshold_) {
                    node.entries[i] = std::move(trial);
                    return false;
                }
            }
            Feature fresh;
            fresh.add_point(p);
            node.entries.push_back(std::move(fresh));
            return node.entries.size() > branching_;
        }
        const std::size_t i = nearest_entry(node, p);
        if (insert_into(*node.children[i], p)) {
            auto [left, right] = split_node(*node.children[i]);
            node.entries[i] = sum_of(*left);
            node.children[i] = std::move(left);
            node.entries.insert(node.entries.begin() + i + 1, sum_of(*right));
            node.children.insert(node.children.begin() + i + 1, std::move(right));
        } else {
            node.entries[i].add_point(p);
        }
        return node.entries.size() > branching_;
    }

    static void collect(const Node& node, std::vector<Feature>& out) {
        if (node.leaf) {
            out.insert(out.end(), node.entries.begin(), node.entries.end());
            return;
        }
        for (const auto& child : node.children) collect(*child, out);
    }

    double threshold_;
    std::size_t branching_;
    std::unique_ptr<Node> root_;
};

// Merges subcluster features down to k groups, always joining the pair of
// groups whose centroids are closest. Nearest-neighbour caching keeps the
// usual case near O(m^2).
std::vector<Feature> merge_to_k(std::vector<Feature> groups, std::size_t k) {
    std::vector<bool> alive(groups.size(), true);
    std::vector<std::vector<double>> centroids(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i)
        centroids[i] = groups[i].centroid();
    std::size_t n_alive = groups.size();

    struct Neighbour {
        double d = std::numeric_limits<double>::infinity();
        std::size_t j = 0;
    };
    std::vector<Neighbour> nn(groups.size());
    const auto recompute = [&](std::size_t i) {
        nn[i] = Neighbour{};
        for (std::size_t j = 0; j < groups.size(); ++j) {
            if (j == i || !alive[j]) continue;
            const double d = squared_distance(centroids[i], centroids[j]);
            if (d < nn[i].d || (d == nn[i].d && j < nn[i].j)) nn[i] = {d, j};
        }
    };
    for (std::size_t i = 0; i < groups.size(); ++i)
        if (alive[i]) recompute(i);

    while (n_alive > k) {
        std::size_t best = groups.size();
        for (std::size_t i = 0; i < groups.size(); ++i) {
            if (!alive[i]) continue;
            if (best == groups.size() || nn[i].d < nn[best].d) best = i;
        }
        const std::size_t a = std::min(best, nn[best].j);
        const std::size_t b = std::max(best, nn[best].j);
        groups[a].merge(groups[b]);
        centroids[a] = groups[a].centroid();
        alive[b] = false;
        --n_alive;
        recompute(a);
        for (std::size_t i = 0; i < groups.size(); ++i) {
            if (!alive[i] || i == a) continue;
            if (nn[i].j == a || nn[i].j == b) {
                recompute(i);  // cached target changed or died
            } else {
                // the merged centroid may have moved closer than the cache
                const double d = squared_distance(centroids[i], centroids[a]);
                if (d < nn[i].d) nn[i] = {d, a};
            }
        }
    }

    std::vector<Feature> out;
    for (std::size_t i = 0; i < groups.size(); ++i)
        if (alive[i]) out.push_back(std::move(groups[i]));
    return out;
}

}  // namespace

BirchResult birch_cluster(const std::vector<std::vector<double>>& points,
                          int k_clusters, double threshold, int branching) {
    if (k_clusters < 1) throw std::invalid_argument("k_clusters must be >= 1");
    if (threshold <= 0.0) throw std::invalid_argument("threshold must be > 0");
    if (branching < 2) throw std::invalid_argument("branching must be >= 2");
    for (const auto& p : points)
        if (p.size() != points.front().size())
            throw std::invalid_argument("points have mixed dimensions");

    BirchResult result;
    if (points.size() < static_cast<std::size_t>(k_clusters)) {
        result.degenerate = true;
        for (std::size_t i = 0; i < points.size(); ++i) {
            result.cluster_of_point.push_back(static_cast<int>(i));
            result.centroids.push_back(points[i]);
        }
        return result;
    }

    CfTree tree(threshold, static_cast<std::size_t>(branching));
    for (const auto& p : points) tree.insert(p);
    std::vector<Feature> leaves = tree.leaf_subclusters();

    const std::size_t k = std::min<std::size_t>(
        static_cast<std::size_t>(k_clusters), leaves.size());
    std::vector<Feature> finals = merge_to_k(std::move(leaves), k);
    for (const Feature& f : finals) result.centroids.push_back(f.centroid());

    result.cluster_of_point.reserve(points.size());
    for (const auto& p : points) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < result.centroids.size(); ++c) {
            const double d = squared_distance(result.centroids[c], p);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        result.cluster_of_point.push_back(static_cast<int>(best));
    }
    return result;
}

std::vector<ClusterSummaryRow> difficulty_classes(
    std::vector<ClusterAssignment>& assignments,
    const std::vector<ExampleStats>& stats) {
    std::unordered_map<std::string, const ExampleStats*> stat_of;
    for (const auto& s : stats) stat_of.emplace(s.example_id, &s);

    int max_cluster = -1;
    for (const auto& a : assignments) max_cluster = std::max(max_cluster, a.cluster_id);
    const std::size_t n_clusters = static_cast<std::size_t>(max_cluster + 1);

    struct Group {
        std::vector<const ExampleStats*> members;
        double mean_sum = 0.0, std_sum = 0.0;
        double centroid_mean() const { return mean_sum / members.size(); }
        double centroid_std() const { return std_sum / members.size(); }
    };
    std::vector<Group> groups(n_clusters);
    for (const auto& a : assignments) {
        auto it = stat_of.find(a.example_id);
        if (it == stat_of.end())
            throw std::runtime_error("no stats for assigned id \"" +
                                     a.example_id + "\"");
        Group& g = groups[static_cast<std::size_t>(a.cluster_id)];
        g.members.push_back(it->second);
        g.mean_sum += it->second->mean;
        g.std_sum += it->second->stddev;
    }

    const auto at_origin = [](const ExampleStats& s) {
        return s.mean == 0.0 && s.stddev == 0.0;
    };
    int origin_cluster = -1;
    for (std::size_t c = 0; c < n_clusters; ++c)
        if (std::any_of(groups[c].members.begin(), groups[c].members.end(),
                        [&](const ExampleStats* s) { return at_origin(*s); })) {
            origin_cluster = static_cast<int>(c);
            break;
        }
    // Without an exact (0,0) member, the lowest-mean cluster stands in for
    // the correctness end of the spectrum.
    if (origin_cluster < 0) {
        double lowest = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < n_clusters; ++c) {
            if (groups[c].members.empty()) continue;
            if (groups[c].centroid_mean() < lowest) {
                lowest = groups[c].centroid_mean();
                origin_cluster = static_cast<int>(c);
            }
        }
    }

    std::vector<std::size_t> remaining;
    for (std::size_t c = 0; c < n_clusters; ++c)
        if (static_cast<int>(c) != origin_cluster && !groups[c].members.empty())
            remaining.push_back(c);
    std::sort(remaining.begin(), remaining.end(), [&](std::size_t a, std::size_t b) {
        return groups[a].centroid_std() > groups[b].centroid_std();
    });

    std::unordered_map<int, std::string> label_of_cluster;
    if (!remaining.empty()) label_of_cluster[static_cast<int>(remaining[0])] = "Polarized";
    for (std::size_t i = 1; i < remaining.size(); ++i)
        label_of_cluster[static_cast<int>(remaining[i])] = "Challenges";

    for (auto& a : assignments) {
        if (a.cluster_id == origin_cluster)
            a.label = at_origin(*stat_of.at(a.example_id)) ? "All Correct"
                                                           : "Mostly Correct";
        else
            a.label = label_of_cluster.at(a.cluster_id);
    }

    const std::vector<std::string> order{"All Correct", "Mostly Correct",
                                         "Polarized", "Challenges"};
    std::vector<ClusterSummaryRow> table;
    for (const std::string& label : order) {
        ClusterSummaryRow row;
        row.label = label;
        row.gr_min = row.std_min = std::numeric_limits<double>::infinity();
        row.gr_max = row.std_max = -std::numeric_limits<double>::infinity();
        for (const auto& a : assignments) {
            if (a.label != label) continue;
            const ExampleStats& s = *stat_of.at(a.example_id);
            ++row.count;
            row.gr_min = std::min(row.gr_min, s.mean);
            row.gr_max = std::max(row.gr_max, s.mean);
            row.std_min = std::min(row.std_min, s.stddev);
            row.std_max = std::max(row.std_max, s.stddev);
        }
        if (row.count > 0) table.push_back(std::move(row));
    }
    return table;
}

DifficultyResult cluster_partition(const GrMatrix& m,
                                   const std::vector<ExampleStats>& stats,
                                   bool answerable, ClusterFeatures features,
                                   int k_clusters, const BirchParams& params) {
    std::unordered_map<std::string, const ExampleStats*> stat_of;
    for (const auto& s : stats) stat_of.emplace(s.example_id, &s);

    std::vector<std::size_t> rows;
    for (std::size_t row = 0; row < m.n_examples(); ++row) {
        auto it = stat_of.find(m.example_ids[row]);
        if (it == stat_of.end())
            throw std::runtime_error("no stats for matrix id \"" +
                                     m.example_ids[row] + "\"");
        if (it->second->answerable == answerable) rows.push_back(row);
    }

    std::vector<std::vector<double>> points;
    points.reserve(rows.size());
    for (std::size_t row : rows) {
        if (features == ClusterFeatures::Vector) {
            std::vector<double> v(m.n_experiments());
            for (std::size_t col = 0; col < m.n_experiments(); ++col)
                v[col] = m.at(row, col);
            points.push_back(std::move(v));
        } else {
            const ExampleStats& s = *stat_of.at(m.example_ids[row]);
            points.push_back({s.mean, s.stddev});
        }
    }

    const BirchResult birch =
        birch_cluster(points, k_clusters, params.threshold, params.branching);

    DifficultyResult result;
    result.degenerate = birch.degenerate;
    result.assignments.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        result.assignments.push_back(
            {m.example_ids[rows[i]], birch.cluster_of_point[i], {}});
    if (!result.assignments.empty())
        result.table = difficulty_classes(result.assignments, stats);
    return result;
}

std::vector<std::string> never_correct(const GrMatrix& m) {
    std::vector<std::string> out;
    for (std::size_t row = 0; row < m.n_examples(); ++row) {
        bool any_zero = false;
        for (std::size_t col = 0; col < m.n_experiments(); ++col)
            if (m.at(row, col) == 0) {
                any_zero = true;
                break;
            }
        if (!any_zero) out.push_back(m.example_ids[row]);
    }
    return out;
}

void write_matrix_csv(const GrMatrix& m, std::ostream& out) {
    out << "id";
    for (const auto& e : m.experiments) out << ',' << detail::csv_escape(e);
    out << '\n';
    for (std::size_t row = 0; row < m.n_examples(); ++row) {
        out << detail::csv_escape(m.example_ids[row]);
        for (std::size_t col = 0; col < m.n_experiments(); ++col)
            out << ',' << m.at(row, col);
        out << '\n';
    }
}

GrMatrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open matrix file: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(path + ": empty matrix file");
    std::vector<std::string> header = detail::csv_split(line);
    if (header.empty() || header[0] != "id")
        throw std::runtime_error(path + ": matrix header must start with id");

    GrMatrix m;
    m.experiments.assign(header.begin() + 1, header.end());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<std::string> cells = detail::csv_split(line);
        if (cells.size() != header.size())
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected " + std::to_string(header.size()) +
                                     " cells");
        m.example_ids.push_back(cells[0]);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            try {
                m.values.push_back(std::stoi(cells[c]));
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": bad golden rank \"" + cells[c] + "\"");
            }
        }
    }
    if (m.example_ids.empty())
        throw std::runtime_error(path + ": matrix has no rows");
    return m;
}

void write_stats_csv(const std::vector<ExampleStats>& stats, std::ostream& out) {
    out << "id,mean,std,answerable\n";
    for (const auto& s : stats)
        out << detail::csv_escape(s.example_id) << ',' << detail::fixed(s.mean, 6)
            << ',' << detail::fixed(s.stddev, 6) << ','
            << (s.answerable ? "true" : "false") << '\n';
}

}  // namespace goldrank::fleet
