/*
 * Copyright 2026 The Hallu Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string_view>

namespace hallu {

// Platform-stable hashing used for seed derivation and cache keys.
// std::hash is not stable across standard libraries, so it is never used for
// anything that is persisted or compared between runs.

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// FNV-1a over bytes, finalized with splitmix64.
std::uint64_t stable_hash(std::string_view bytes) noexcept;

// Combines a running hash with another value; order-sensitive.
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept;
std::uint64_t hash_combine(std::uint64_t seed, std::string_view value) noexcept;

// Child seed for sub-step `index` of a computation seeded with `base`.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return hash_combine(base, index);
}

// Uniform double in [0, 1) from 53 high bits of a mixed 64-bit value.
double unit_interval(std::uint64_t bits) noexcept;

// Sender-side seeds are kept within the signed 63-bit range accepted by
// common HTTP backends.
inline std::int64_t wire_seed(std::uint64_t seed) noexcept {
  return static_cast<std::int64_t>(seed >> 1);
}

}  // namespace hallu
