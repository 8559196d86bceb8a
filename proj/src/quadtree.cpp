#include "evrn/quadtree.hpp"

#include <algorithm>
#include <queue>
#include <tuple>

#include "evrn/errors.hpp"

namespace evrn {

namespace {

constexpr uint64_t kLeafBits = 9;         // 1 structure bit + 8 value bits
constexpr uint64_t kSplitDeltaBits = 28;  // leaf -> internal + 4 leaves

// Summed-area tables over f, f^2 and the ROI indicator, (H+1) x (W+1).
struct RegionStats {
  int width = 0;
  std::vector<double> s1, s2;
  std::vector<double> roi;

  RegionStats(const Frame& f, const RoiMask* mask)
  {
    width = f.width;
    const int stride = f.width + 1;
    s1.assign(static_cast<size_t>(f.height + 1) * stride, 0.0);
    s2.assign(s1.size(), 0.0);
    if (mask) roi.assign(s1.size(), 0.0);
    for (int y = 0; y < f.height; ++y) {
      double row1 = 0.0, row2 = 0.0, rowr = 0.0;
      for (int x = 0; x < f.width; ++x) {
        const double v = f.at(y, x);
        row1 += v;
        row2 += v * v;
        const size_t idx = static_cast<size_t>(y + 1) * stride + (x + 1);
        const size_t up = static_cast<size_t>(y) * stride + (x + 1);
        s1[idx] = s1[up] + row1;
        s2[idx] = s2[up] + row2;
        if (mask) {
          rowr += mask->at(y, x) ? 1.0 : 0.0;
          roi[idx] = roi[up] + rowr;
        }
      }
    }
  }

  double sum(const std::vector<double>& t, int x, int y, int w, int h) const
  {
    const int stride = width + 1;
    return t[static_cast<size_t>(y + h) * stride + (x + w)] -
           t[static_cast<size_t>(y) * stride + (x + w)] -
           t[static_cast<size_t>(y + h) * stride + x] +
           t[static_cast<size_t>(y) * stride + x];
  }

  double mean(int x, int y, int w, int h) const
  {
    return sum(s1, x, y, w, h) / (static_cast<double>(w) * h);
  }

  double sse(int x, int y, int w, int h) const
  {
    const double n = static_cast<double>(w) * h;
    const double a = sum(s1, x, y, w, h);
    const double e = sum(s2, x, y, w, h) - a * a / n;
    return e > 0.0 ? e : 0.0;
  }

  double roi_fraction(int x, int y, int w, int h) const
  {
    if (roi.empty()) return 0.0;
    return sum(roi, x, y, w, h) / (static_cast<double>(w) * h);
  }
};

struct Candidate {
  double priority;
  int y, x;  // region origin, used as the deterministic tie-break
  int node;
};

struct CandidateLess {
  bool operator()(const Candidate& a, const Candidate& b) const
  {
    if (a.priority != b.priority) return a.priority < b.priority;
    return std::tie(a.y, a.x) > std::tie(b.y, b.x);
  }
};

// 1-pixel-wide or -tall regions stay leaves forever.
bool splittable(const QuadTree::Node& n) { return n.w >= 2 && n.h >= 2; }

void serialize_node(const QuadTree& tree, int i, Bitstream& out)
{
  const QuadTree::Node& n = tree.nodes[i];
  if (n.child < 0) {
    out.append_bit(false);
    out.append_bits(quantize8(n.value), 8);
  } else {
    out.append_bit(true);
    for (int k = 0; k < 4; ++k) serialize_node(tree, n.child + k, out);
  }
}

// Parses the preorder stream into a slot whose region is already set.
// Sibling nodes must stay at consecutive indices, so all four child slots
// are allocated before any child subtree is parsed.
void deserialize_into(const Bitstream& in, uint64_t& pos, QuadTree& tree, int slot)
{
  if (pos >= in.n_bits) {
    throw FormatError("quadtree bitstream: truncated structure");
  }
  if (in.read_bit(pos++)) {
    const int x = tree.nodes[slot].x, y = tree.nodes[slot].y;
    const int w = tree.nodes[slot].w, h = tree.nodes[slot].h;
    if (w < 2 || h < 2) {
      throw FormatError("quadtree bitstream: split of an unsplittable region");
    }
    const int w1 = w / 2, h1 = h / 2;
    const int first = static_cast<int>(tree.nodes.size());
    tree.nodes[slot].child = first;
    const int regions[4][4] = {{x, y, w1, h1},
                               {x + w1, y, w - w1, h1},
                               {x, y + h1, w1, h - h1},
                               {x + w1, y + h1, w - w1, h - h1}};
    for (auto& r : regions) {
      tree.nodes.push_back({r[0], r[1], r[2], r[3], -1, 0.0});
    }
    for (int k = 0; k < 4; ++k) {
      deserialize_into(in, pos, tree, first + k);
    }
  } else {
    if (pos + 8 > in.n_bits) {
      throw FormatError("quadtree bitstream: truncated leaf value");
    }
    tree.nodes[slot].value = dequantize8(static_cast<uint8_t>(in.read_bits(pos, 8)));
    pos += 8;
  }
}

}  // namespace

size_t QuadTree::leaf_count() const
{
  size_t n = 0;
  for (const Node& node : nodes) {
    if (node.child < 0) ++n;
  }
  return n;
}

uint64_t bit_cost(const QuadTree& tree)
{
  const uint64_t leaves = tree.leaf_count();
  const uint64_t internals = tree.nodes.size() - leaves;
  return internals + leaves + 8 * leaves;
}

void Bitstream::append_bit(bool b)
{
  const size_t byte = static_cast<size_t>(n_bits / 8);
  if (byte >= bytes.size()) bytes.push_back(0);
  if (b) bytes[byte] |= static_cast<uint8_t>(0x80u >> (n_bits % 8));
  ++n_bits;
}

void Bitstream::append_bits(uint32_t value, int count)
{
  for (int i = count - 1; i >= 0; --i) {
    append_bit((value >> i) & 1u);
  }
}

bool Bitstream::read_bit(uint64_t pos) const
{
  return (bytes[static_cast<size_t>(pos / 8)] >> (7 - pos % 8)) & 1u;
}

uint32_t Bitstream::read_bits(uint64_t pos, int count) const
{
  uint32_t v = 0;
  for (int i = 0; i < count; ++i) {
    v = (v << 1) | (read_bit(pos + i) ? 1u : 0u);
  }
  return v;
}

QuadTree build_quadtree(const Frame& frame, BitBudget budget, const RoiMask* roi, double rho)
{
  if (frame.height <= 0 || frame.width <= 0) {
    throw std::invalid_argument("build_quadtree: empty frame");
  }
  if (roi && (roi->height != frame.height || roi->width != frame.width)) {
    throw std::invalid_argument("build_quadtree: ROI dimensions do not match frame");
  }
  if (budget.bits < kLeafBits) {
    throw BudgetError("build_quadtree: budget of " + std::to_string(budget.bits) +
                      " bits cannot hold a single leaf (" + std::to_string(kLeafBits) + ")");
  }

  const RegionStats stats(frame, roi);
  QuadTree tree;
  tree.width = frame.width;
  tree.height = frame.height;
  tree.nodes.push_back(
      {0, 0, frame.width, frame.height, -1, stats.mean(0, 0, frame.width, frame.height)});

  std::priority_queue<Candidate, std::vector<Candidate>, CandidateLess> queue;
  auto consider = [&](int node_index) {
    const QuadTree::Node& n = tree.nodes[node_index];
    if (!splittable(n)) return;
    const double sse = stats.sse(n.x, n.y, n.w, n.h);
    if (sse <= 0.0) return;  // zero variance never splits
    const double priority = sse * (1.0 + rho * stats.roi_fraction(n.x, n.y, n.w, n.h));
    queue.push({priority, n.y, n.x, node_index});
  };
  consider(0);

  uint64_t cost = kLeafBits;
  while (!queue.empty() && cost + kSplitDeltaBits <= budget.bits) {
    const Candidate top = queue.top();
    queue.pop();
    QuadTree::Node& parent = tree.nodes[top.node];
    const int w1 = parent.w / 2, h1 = parent.h / 2;
    const int x = parent.x, y = parent.y, w = parent.w, h = parent.h;
    const int first = static_cast<int>(tree.nodes.size());
    parent.child = first;
    const int regions[4][4] = {{x, y, w1, h1},
                               {x + w1, y, w - w1, h1},
                               {x, y + h1, w1, h - h1},
                               {x + w1, y + h1, w - w1, h - h1}};
    for (auto& r : regions) {
      tree.nodes.push_back({r[0], r[1], r[2], r[3], -1, stats.mean(r[0], r[1], r[2], r[3])});
    }
    cost += kSplitDeltaBits;
    for (int k = 0; k < 4; ++k) consider(first + k);
  }
  return tree;
}

Frame render_quadtree(const QuadTree& tree)
{
  Frame out(tree.height, tree.width);
  for (const QuadTree::Node& n : tree.nodes) {
    if (n.child >= 0) continue;
    const double v = dequantize8(quantize8(n.value));
    for (int y = n.y; y < n.y + n.h; ++y) {
      double* row = out.data.data() + static_cast<size_t>(y) * out.width;
      std::fill(row + n.x, row + n.x + n.w, v);
    }
  }
  return out;
}

Bitstream serialize_quadtree(const QuadTree& tree)
{
  Bitstream out;
  serialize_node(tree, 0, out);
  return out;
}

QuadTree deserialize_quadtree(const Bitstream& stream, int height, int width)
{
  if (height <= 0 || width <= 0) {
    throw std::invalid_argument("deserialize_quadtree: invalid dimensions");
  }
  QuadTree tree;
  tree.width = width;
  tree.height = height;
  tree.nodes.push_back({0, 0, width, height, -1, 0.0});
  uint64_t pos = 0;
  deserialize_into(stream, pos, tree, 0);
  return tree;
}

Frame degrade(const Frame& frame, BitBudget budget, const RoiMask* roi, double rho)
{
  return render_quadtree(build_quadtree(frame, budget, roi, rho));
}

namespace {

// Node storage order differs between building and deserializing, so equality
// walks the two hierarchies in parallel.
bool subtree_equal(const QuadTree& a, int ia, const QuadTree& b, int ib)
{
  const QuadTree::Node& na = a.nodes[ia];
  const QuadTree::Node& nb = b.nodes[ib];
  if (na.x != nb.x || na.y != nb.y || na.w != nb.w || na.h != nb.h) return false;
  if ((na.child < 0) != (nb.child < 0)) return false;
  if (na.child < 0) return na.value == nb.value;
  for (int k = 0; k < 4; ++k) {
    if (!subtree_equal(a, na.child + k, b, nb.child + k)) return false;
  }
  return true;
}

}  // namespace

bool operator==(const QuadTree& a, const QuadTree& b)
{
  if (a.width != b.width || a.height != b.height || a.nodes.size() != b.nodes.size()) {
    return false;
  }
  return subtree_equal(a, 0, b, 0);
}

}  // namespace evrn
