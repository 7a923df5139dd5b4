#include "core/cluster.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "core/common.hpp"

namespace rhythmlab {

using Eigen::Index;

Linkage linkage_from_name(const std::string& name) {
    if (name == "complete") return Linkage::complete;
    if (name == "average") return Linkage::average;
    if (name == "single") return Linkage::single;
    throw Error::invalid("unknown linkage \"" + name + "\" (complete|average|single)");
}

void DendrogramNode::collect_leaves(std::vector<int>& out) const {
    if (is_leaf()) {
        out.push_back(leaf);
        return;
    }
    left->collect_leaves(out);
    right->collect_leaves(out);
}

Dendrogram hierarchical_cluster(const DissimilarityMatrix& matrix, Linkage linkage) {
    const Index n = matrix.d.rows();
    if (n < 2) throw Error::invalid("clustering needs at least 2 items");
    if (matrix.d.cols() != n) throw Error::invalid("dissimilarity matrix must be square");
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (matrix.d(i, j) < 0.0) throw Error::invalid("dissimilarities must be non-negative");
            if (std::abs(matrix.d(i, j) - matrix.d(j, i)) > 1e-12)
                throw Error::invalid("dissimilarity matrix must be symmetric");
        }
    }

    struct Cluster {
        std::unique_ptr<DendrogramNode> node;
        bool alive = true;
    };
    std::vector<Cluster> clusters(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) {
        auto node = std::make_unique<DendrogramNode>();
        node->leaf = static_cast<int>(i);
        node->size = 1;
        clusters[static_cast<size_t>(i)].node = std::move(node);
    }

    Eigen::MatrixXd d = matrix.d;  // inter-cluster distances, updated in place
    Dendrogram tree;
    tree.labels = matrix.labels;

    for (Index merge = 0; merge < n - 1; ++merge) {
        double best = std::numeric_limits<double>::infinity();
        Index bi = -1, bj = -1;
        for (Index i = 0; i < n; ++i) {
            if (!clusters[static_cast<size_t>(i)].alive) continue;
            for (Index j = i + 1; j < n; ++j) {
                if (!clusters[static_cast<size_t>(j)].alive) continue;
                if (d(i, j) < best) {
                    best = d(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }

        auto parent = std::make_unique<DendrogramNode>();
        parent->height = best;
        parent->size = clusters[static_cast<size_t>(bi)].node->size +
                       clusters[static_cast<size_t>(bj)].node->size;
        const int size_i = clusters[static_cast<size_t>(bi)].node->size;
        const int size_j = clusters[static_cast<size_t>(bj)].node->size;
        parent->left = std::move(clusters[static_cast<size_t>(bi)].node);
        parent->right = std::move(clusters[static_cast<size_t>(bj)].node);
        tree.merge_heights.push_back(best);

        for (Index k = 0; k < n; ++k) {
            if (!clusters[static_cast<size_t>(k)].alive || k == bi || k == bj) continue;
            double updated = 0.0;
            switch (linkage) {
                case Linkage::complete: updated = std::max(d(bi, k), d(bj, k)); break;
                case Linkage::single: updated = std::min(d(bi, k), d(bj, k)); break;
                case Linkage::average:
                    updated = (size_i * d(bi, k) + size_j * d(bj, k)) / (size_i + size_j);
                    break;
            }
            d(bi, k) = d(k, bi) = updated;
        }
        clusters[static_cast<size_t>(bj)].alive = false;
        clusters[static_cast<size_t>(bi)].node = std::move(parent);
    }

    for (Index i = 0; i < n; ++i) {
        if (clusters[static_cast<size_t>(i)].alive) {
            tree.root = std::move(clusters[static_cast<size_t>(i)].node);
            break;
        }
    }
    return tree;
}

namespace {

nlohmann::json node_to_json(const DendrogramNode& node, const std::vector<std::string>& labels) {
    if (node.is_leaf()) {
        nlohmann::json j;
        j["leaf"] = labels.empty() ? std::to_string(node.leaf)
                                   : labels.at(static_cast<size_t>(node.leaf));
        return j;
    }
    nlohmann::json j;
    j["left"] = node_to_json(*node.left, labels);
    j["right"] = node_to_json(*node.right, labels);
    j["height"] = node.height;
    return j;
}

}  // namespace

std::string dendrogram_to_json(const Dendrogram& tree) {
    return node_to_json(*tree.root, tree.labels).dump(1);
}

void save_dendrogram_json(const Dendrogram& tree, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error::io("cannot write json file: " + path);
    out << dendrogram_to_json(tree) << "\n";
}

}  // namespace rhythmlab
