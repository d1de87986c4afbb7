#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "c2sw/error.hpp"

namespace c2sw {

using Rng = std::mt19937_64;

enum class NoiseOp { kMistype, kRepeat, kSwap, kDrop, kToggle, kPunctuation };

inline constexpr std::array<NoiseOp, 6> kAllNoiseOps = {
    NoiseOp::kMistype, NoiseOp::kRepeat, NoiseOp::kSwap,
    NoiseOp::kDrop,    NoiseOp::kToggle, NoiseOp::kPunctuation};

std::string_view noise_op_name(NoiseOp op);
NoiseOp parse_noise_op(std::string_view name);

// A rejected edit: token too short, special token, or nothing to change.
class NoiseError : public Error {
 public:
  using Error::Error;
};

struct KeyboardLayout {
  std::string name;
  std::map<char32_t, std::u32string> neighbors;

  void validate() const;
};

// JSON document: { "layout name": { "a": ["q", "w", "s"], ... }, ... }.
std::vector<KeyboardLayout> parse_layouts(std::string_view json_text);
std::vector<KeyboardLayout> load_layouts(const std::filesystem::path& path);

struct NoiseConfig {
  std::vector<NoiseOp> enabled_ops{kAllNoiseOps.begin(), kAllNoiseOps.end()};
  std::vector<KeyboardLayout> layouts;
  std::u32string punctuation = U"()-.,':;";
  // Tokens need at least this many editable characters ("##" excluded).
  std::size_t min_length = 5;
  double p_noise = 0.5;

  void validate() const;
};

inline NoiseConfig disabled_noise() {
  NoiseConfig c;
  c.p_noise = 0.0;
  return c;
}

// One concrete edit. position indexes the editable region; replacement is the
// substituted character (mistype) or inserted mark (punctuation).
struct NoiseEdit {
  NoiseOp op;
  std::size_t position = 0;
  char32_t replacement = 0;
};

// Applies an edit exactly as given; throws NoiseError if the position is
// invalid for the op.
std::string apply_edit(std::string_view token, const NoiseEdit& edit);

// Draws an edit that changes the token. Throws NoiseError when the token is
// too short, special, or has nothing the op can change.
NoiseEdit sample_edit(std::string_view token, NoiseOp op, Rng& rng, const NoiseConfig& config);
std::string apply_op(std::string_view token, NoiseOp op, Rng& rng, const NoiseConfig& config);

struct NoiseOutcome {
  std::string text;
  std::optional<NoiseOp> op;  // set when the token was changed
};

// With probability p_noise (and only for long enough tokens) applies one
// uniformly chosen enabled op; otherwise returns the token unchanged.
NoiseOutcome sample_noise(std::string_view token, Rng& rng, const NoiseConfig& config);
std::string sample_noisy(std::string_view token, Rng& rng, const NoiseConfig& config);

// Characters noise can introduce (case counterparts, punctuation, layout keys),
// for building a character alphabet that covers noised tokens.
std::u32string noise_characters(std::u32string_view base, const NoiseConfig& config);

}  // namespace c2sw
