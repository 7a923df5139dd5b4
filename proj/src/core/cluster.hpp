#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/represent.hpp"

namespace rhythmlab {

enum class Linkage { complete, average, single };

Linkage linkage_from_name(const std::string& name);

struct DendrogramNode {
    std::unique_ptr<DendrogramNode> left, right;
    double height = 0.0;   // linkage distance at the merge
    int leaf = -1;         // leaf index when left/right are null
    int size = 1;          // leaves under this node

    bool is_leaf() const { return leaf >= 0; }
    void collect_leaves(std::vector<int>& out) const;
};

struct Dendrogram {
    std::unique_ptr<DendrogramNode> root;
    std::vector<std::string> labels;
    std::vector<double> merge_heights;  // in merge order
};

Dendrogram hierarchical_cluster(const DissimilarityMatrix& matrix,
                                Linkage linkage = Linkage::complete);

// Nested {left, right, height} objects with {leaf} leaves.
void save_dendrogram_json(const Dendrogram& tree, const std::string& path);
std::string dendrogram_to_json(const Dendrogram& tree);

}  // namespace rhythmlab
