#ifndef EVRN_ALIGNED_HPP
#define EVRN_ALIGNED_HPP

#include <cstddef>
#include <new>
#include <vector>

namespace evrn {

// 64-byte-aligned allocator for buffers that feed the matrix kernels.
// SIMD peeling inside those kernels depends on the operand addresses, so a
// fixed alignment keeps the floating-point summation order reproducible
// across allocations.
template <typename T, size_t Align = 64>
struct AlignedAllocator {
  using value_type = T;

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U, Align>&)
  {
  }

  T* allocate(size_t n)
  {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(Align)));
  }
  void deallocate(T* p, size_t) noexcept { ::operator delete(p, std::align_val_t(Align)); }

  template <class U>
  struct rebind {
    using other = AlignedAllocator<U, Align>;
  };
  bool operator==(const AlignedAllocator&) const { return true; }
  bool operator!=(const AlignedAllocator&) const { return false; }
};

using AlignedVec = std::vector<double, AlignedAllocator<double>>;

}  // namespace evrn

#endif  // EVRN_ALIGNED_HPP
