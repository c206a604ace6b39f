// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <new>
#include <utility>

namespace tadvit::memory {

/// Bytes currently held by tensor storage across all threads.
std::size_t current_bytes();
/// High-water mark of current_bytes() since the last reset_peak().
std::size_t peak_bytes();
/// Restarts the high-water mark from the current level.
void reset_peak();

/// Keeps freed tensor payloads in the process heap instead of returning them
/// to the OS after every op (glibc only; no-op elsewhere). Idempotent.
void tune_heap();

void record_allocation(std::size_t bytes);
void record_release(std::size_t bytes);

/// Payload alignment. A fixed, packet-sized alignment keeps Eigen's
/// vectorised reductions on the same summation order in every run.
inline constexpr std::size_t kPayloadAlignment = 64;

/// std::allocator-compatible allocator that feeds the counters above. Every
/// Tensor stores its payload through this allocator, so the peak covers
/// weights, activations and gradients.
template <typename T>
struct TrackingAllocator {
  using value_type = T;
  template <typename U>
  struct rebind {
    using other = TrackingAllocator<U>;
  };

  TrackingAllocator() noexcept = default;
  template <typename U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    T* p = static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kPayloadAlignment}));
    record_allocation(n * sizeof(T));
    return p;
  }
  // Default-initialise: Tensor decides whether a fresh payload is zeroed.
  template <typename U>
  void construct(U* p) noexcept(noexcept(::new (static_cast<void*>(p)) U)) {
    ::new (static_cast<void*>(p)) U;
  }
  template <typename U, typename... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }

  void deallocate(T* p, std::size_t n) noexcept {
    record_release(n * sizeof(T));
    ::operator delete(p, std::align_val_t{kPayloadAlignment});
  }

  template <typename U>
  bool operator==(const TrackingAllocator<U>&) const noexcept {
    return true;
  }
};

}  // namespace tadvit::memory
