#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "c2sw/model.hpp"

namespace c2sw {

// Layout (all integers little-endian):
//   "C2SW", u32 version
//   config: u32 d_char, d_out, n_layers, n_heads, max_chars; f64 ln_eps;
//           u8 standard_preln, u8 marker_on_full_words
//   alphabet: u32 count, count x u32 code points (reserved symbols implicit)
//   u32 tensor count, then per tensor: u32 name length, name, u32 rows, u32 cols
//   payloads in manifest order, row-major f64
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Char2Subword& model);
Char2Subword deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Char2Subword& model);
Char2Subword load_checkpoint(const std::filesystem::path& path);

}  // namespace c2sw
