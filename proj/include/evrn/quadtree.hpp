#ifndef EVRN_QUADTREE_HPP
#define EVRN_QUADTREE_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "evrn/frame.hpp"

namespace evrn {

// Binary object-of-interest mask, same dimensions as the frames it biases.
struct RoiMask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> data;  // values in {0,1}

  RoiMask() = default;
  RoiMask(int h, int w, uint8_t fill = 0)
      : height(h), width(w), data(static_cast<size_t>(h) * w, fill)
  {
  }
  uint8_t at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
  uint8_t& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
};

struct BitBudget {
  uint64_t bits = 0;
};

// Hierarchical block decomposition of a frame. Internal nodes split their
// region at the floor midpoints into four children (TL, TR, BL, BR); each
// leaf carries the mean intensity of its source region.
struct QuadTree {
  struct Node {
    int x = 0, y = 0, w = 0, h = 0;
    int child = -1;  // index of first of 4 consecutive children; -1 for leaves
    double value = 0.0;
  };

  int width = 0;
  int height = 0;
  std::vector<Node> nodes;  // nodes[0] is the root

  bool is_leaf(int i) const { return nodes[i].child < 0; }
  size_t leaf_count() const;
  size_t internal_count() const { return nodes.size() / 4; }
};

// Serialized cost in bits: one structure bit per node plus 8 value bits per
// leaf.
uint64_t bit_cost(const QuadTree& tree);

// Raw serialized tree, MSB-first, zero-padded to a whole byte.
struct Bitstream {
  std::vector<uint8_t> bytes;
  uint64_t n_bits = 0;

  void append_bit(bool b);
  void append_bits(uint32_t value, int count);  // MSB first
  bool read_bit(uint64_t pos) const;
  uint32_t read_bits(uint64_t pos, int count) const;
};

// Greedy SSE-priority refinement under the bit budget. Leaves overlapping the
// ROI are boosted by (1 + rho * roi_fraction); ties break in raster order of
// the region origin. Throws BudgetError if the budget cannot hold one leaf.
QuadTree build_quadtree(const Frame& frame, BitBudget budget,
                        const RoiMask* roi = nullptr, double rho = 4.0);

// Fills every leaf region with its 8-bit quantized value.
Frame render_quadtree(const QuadTree& tree);

// Preorder structure bits with 8-bit leaf values interleaved.
Bitstream serialize_quadtree(const QuadTree& tree);

// Rebuilds a tree from the stream; frame dimensions are side information.
QuadTree deserialize_quadtree(const Bitstream& stream, int height, int width);

// render(build(...)) composition.
Frame degrade(const Frame& frame, BitBudget budget, const RoiMask* roi = nullptr,
              double rho = 4.0);

bool operator==(const QuadTree& a, const QuadTree& b);

}  // namespace evrn

#endif  // EVRN_QUADTREE_HPP
