#pragma once

#include <filesystem>
#include <iosfwd>

#include "lg4av/model.hpp"

namespace lg4av::checkpoint {

inline constexpr char kMagic[8] = {'L', 'G', '4', 'A', 'V', 'C', 'K', 'P'};
inline constexpr std::uint32_t kVersion = 1;

/// Binary container, little-endian, doubles stored as raw IEEE-754 bits:
///   magic "LG4AVCKP", u32 version,
///   variant, k, old-author count, encoder config,
///   vocabulary tokens, author manifest (= feature row order),
///   encoder tensors (name, length, values) in a fixed order,
///   head weights, head bias, propagated feature matrices.
/// Loading reproduces the model bit for bit.
void save(std::ostream& out, const model::Lg4avModel& m);
model::Lg4avModel load(std::istream& in);

void save(const std::filesystem::path& path, const model::Lg4avModel& m);
model::Lg4avModel load(const std::filesystem::path& path);

}  // namespace lg4av::checkpoint
