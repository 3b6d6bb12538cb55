#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pathnet/numerics.hpp"

namespace pathnet {

// Architecture of a layered module bank: layer l (1-based) holds
// widths[l-1] interchangeable modules mapping dims[l-1] -> dims[l].
struct SupernetConfig {
  int layers = 0;              // L
  std::vector<int> widths;     // K_l, size L
  std::vector<int> dims;       // p_0..p_L, size L+1

  int input_dim() const { return dims.front(); }
  int head_dim() const { return dims.back(); }
  void validate() const;       // throws on malformed shapes
};

// One module index per layer, 1-based to match layer/module numbering.
// Serialized form is 0-based (see file-format notes in the README).
struct Pathway {
  std::vector<int> choice;

  bool operator==(const Pathway&) const = default;
};

struct Supernet {
  SupernetConfig config;
  std::vector<std::vector<Mat>> modules;  // modules[l][k]: dims[l+1] x dims[l]

  const Mat& module(int layer, int index) const;  // 1-based
  void validate() const;
};

// B_alpha = B_L^{a[L]} ... B_1^{a[1]}, a head_dim x input_dim matrix.
Mat compose(const Supernet& net, const Pathway& path);

// All pathways in lexicographic order. Throws if the product of widths
// exceeds `cap`, naming the cap.
std::vector<Pathway> enumerate_pathways(const SupernetConfig& config,
                                        std::int64_t cap = 1000000);

// Trainable parameter count: T*p_L + sum_l K_l * p_l * p_{l-1}.
std::int64_t dof(const SupernetConfig& config, std::int64_t task_count);

// JSON round trip; doubles survive bit-exactly via shortest-decimal encoding.
std::string supernet_to_json(const Supernet& net);
Supernet supernet_from_json(const std::string& text);

}  // namespace pathnet
