#include "c2sw/noise.hpp"

#include <algorithm>
#include <set>

#include "c2sw/file_io.hpp"
#include "c2sw/utf8.hpp"
#include "c2sw/vocab.hpp"
#include "json.hpp"

namespace c2sw {

std::string_view noise_op_name(NoiseOp op) {
  switch (op) {
    case NoiseOp::kMistype: return "mistype";
    case NoiseOp::kRepeat: return "repeat";
    case NoiseOp::kSwap: return "swap";
    case NoiseOp::kDrop: return "drop";
    case NoiseOp::kToggle: return "toggle";
    case NoiseOp::kPunctuation: return "punctuation";
  }
  return "unknown";
}

NoiseOp parse_noise_op(std::string_view name) {
  for (NoiseOp op : kAllNoiseOps) {
    if (noise_op_name(op) == name) return op;
  }
  throw Error("unknown noise operation '" + std::string(name) + "'");
}

void KeyboardLayout::validate() const {
  for (const auto& [key, nbrs] : neighbors) {
    if (nbrs.empty()) {
      throw Error("layout '" + name + "': key '" + utf8::encode(key) + "' has no neighbors");
    }
    if (nbrs.find(key) != std::u32string::npos) {
      throw Error("layout '" + name + "': key '" + utf8::encode(key) + "' lists itself");
    }
  }
}

namespace {

char32_t single_char(const nlohmann::json& value, const std::string& where) {
  if (!value.is_string()) throw Error(where + ": expected a one-character string");
  const std::u32string cps = utf8::decode(value.get<std::string>());
  if (cps.size() != 1) throw Error(where + ": expected a one-character string");
  return cps[0];
}

}  // namespace

std::vector<KeyboardLayout> parse_layouts(std::string_view json_text) {
  std::vector<KeyboardLayout> layouts;
  if (std::all_of(json_text.begin(), json_text.end(),
                  [](char c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t'; })) {
    return layouts;
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("layout document: ") + e.what());
  }
  if (!doc.is_object()) throw Error("layout document: top level must be an object");
  for (const auto& [name, keys] : doc.items()) {
    if (!keys.is_object()) throw Error("layout '" + name + "': expected an object of keys");
    KeyboardLayout layout;
    layout.name = name;
    for (const auto& [key, nbrs] : keys.items()) {
      const std::string where = "layout '" + name + "', key '" + key + "'";
      const char32_t k = single_char(key, where);
      if (!nbrs.is_array()) throw Error(where + ": expected an array of neighbors");
      std::u32string list;
      for (const auto& n : nbrs) list.push_back(single_char(n, where));
      layout.neighbors[k] = std::move(list);
    }
    layout.validate();
    layouts.push_back(std::move(layout));
  }
  return layouts;
}

std::vector<KeyboardLayout> load_layouts(const std::filesystem::path& path) {
  return parse_layouts(read_file(path));
}

void NoiseConfig::validate() const {
  if (min_length < 2) throw Error("noise min_length must be at least 2");
  if (!(p_noise >= 0.0 && p_noise <= 1.0)) throw Error("p_noise must lie in [0, 1]");
  if (p_noise > 0.0 && enabled_ops.empty()) throw Error("noise enabled without any operation");
  const bool mistype = std::find(enabled_ops.begin(), enabled_ops.end(), NoiseOp::kMistype) !=
                       enabled_ops.end();
  if (p_noise > 0.0 && mistype && layouts.empty()) throw Error("mistype needs at least one keyboard layout");
  const bool punct = std::find(enabled_ops.begin(), enabled_ops.end(), NoiseOp::kPunctuation) !=
                     enabled_ops.end();
  if (punct && punctuation.empty()) throw Error("punctuation op needs a punctuation set");
  for (const auto& layout : layouts) layout.validate();
}

namespace {

struct Split {
  std::u32string marker;
  std::u32string body;
};

Split split_marker(std::string_view token) {
  std::u32string chars = utf8::decode(token);
  const std::u32string marker = utf8::decode(kContinuationMarker);
  if (chars.size() >= marker.size() && chars.compare(0, marker.size(), marker) == 0) {
    return {marker, chars.substr(marker.size())};
  }
  return {{}, chars};
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

char32_t mistype_replacement(char32_t c, Rng& rng, const NoiseConfig& config) {
  std::vector<const KeyboardLayout*> holders;
  for (const auto& layout : config.layouts) {
    if (layout.neighbors.count(c)) holders.push_back(&layout);
  }
  if (!holders.empty()) {
    const auto& nbrs = holders[uniform_index(rng, holders.size())]->neighbors.at(c);
    return nbrs[uniform_index(rng, nbrs.size())];
  }
  std::set<char32_t> keys;
  for (const auto& layout : config.layouts) {
    for (const auto& [key, nbrs] : layout.neighbors) {
      keys.insert(key);
      keys.insert(nbrs.begin(), nbrs.end());
    }
  }
  keys.erase(c);
  if (keys.empty()) throw NoiseError("no keyboard character available for mistype");
  return *std::next(keys.begin(), static_cast<std::ptrdiff_t>(uniform_index(rng, keys.size())));
}

}  // namespace

std::string apply_edit(std::string_view token, const NoiseEdit& edit) {
  Split s = split_marker(token);
  std::u32string& body = s.body;
  const std::size_t n = body.size();
  const std::size_t pos = edit.position;
  auto bad_position = [&]() {
    return NoiseError(std::string(noise_op_name(edit.op)) + ": position " + std::to_string(pos) +
                      " invalid for '" + std::string(token) + "'");
  };
  switch (edit.op) {
    case NoiseOp::kMistype:
      if (pos >= n) throw bad_position();
      body[pos] = edit.replacement;
      break;
    case NoiseOp::kRepeat:
      if (pos >= n) throw bad_position();
      body.insert(body.begin() + static_cast<std::ptrdiff_t>(pos), body[pos]);
      break;
    case NoiseOp::kSwap:
      if (pos + 1 >= n) throw bad_position();
      std::swap(body[pos], body[pos + 1]);
      break;
    case NoiseOp::kDrop:
      if (pos >= n) throw bad_position();
      body.erase(pos, 1);
      break;
    case NoiseOp::kToggle:
      if (pos >= n) throw bad_position();
      body[pos] = utf8::toggle_case(body[pos]);
      break;
    case NoiseOp::kPunctuation:
      if (pos > n) throw bad_position();
      body.insert(body.begin() + static_cast<std::ptrdiff_t>(pos), edit.replacement);
      break;
  }
  return utf8::encode(s.marker + body);
}

NoiseEdit sample_edit(std::string_view token, NoiseOp op, Rng& rng, const NoiseConfig& config) {
  if (Vocabulary::looks_special(token)) {
    throw NoiseError("special token '" + std::string(token) + "' is never noised");
  }
  const std::u32string body = split_marker(token).body;
  const std::size_t n = body.size();
  if (n < config.min_length) {
    throw NoiseError("token '" + std::string(token) + "' has " + std::to_string(n) +
                     " editable characters, fewer than " + std::to_string(config.min_length));
  }
  NoiseEdit edit{op, 0, 0};
  switch (op) {
    case NoiseOp::kMistype:
      edit.position = uniform_index(rng, n);
      edit.replacement = mistype_replacement(body[edit.position], rng, config);
      break;
    case NoiseOp::kRepeat:
    case NoiseOp::kDrop:
      edit.position = uniform_index(rng, n);
      break;
    case NoiseOp::kSwap: {
      // Only positions whose right neighbor differs produce a change.
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        if (body[i] != body[i + 1]) candidates.push_back(i);
      }
      if (candidates.empty()) throw NoiseError("swap cannot change '" + std::string(token) + "'");
      edit.position = candidates[uniform_index(rng, candidates.size())];
      break;
    }
    case NoiseOp::kToggle: {
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i < n; ++i) {
        if (utf8::has_case(body[i])) candidates.push_back(i);
      }
      if (candidates.empty()) {
        throw NoiseError("toggle: '" + std::string(token) + "' has no case-bearing character");
      }
      edit.position = candidates[uniform_index(rng, candidates.size())];
      break;
    }
    case NoiseOp::kPunctuation:
      if (config.punctuation.empty()) throw NoiseError("empty punctuation set");
      edit.position = uniform_index(rng, n + 1);
      edit.replacement = config.punctuation[uniform_index(rng, config.punctuation.size())];
      break;
  }
  return edit;
}

std::string apply_op(std::string_view token, NoiseOp op, Rng& rng, const NoiseConfig& config) {
  return apply_edit(token, sample_edit(token, op, rng, config));
}

NoiseOutcome sample_noise(std::string_view token, Rng& rng, const NoiseConfig& config) {
  NoiseOutcome out{std::string(token), std::nullopt};
  if (config.p_noise <= 0.0 || config.enabled_ops.empty()) return out;
  if (Vocabulary::looks_special(token) || split_marker(token).body.size() < config.min_length) {
    return out;
  }
  if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) >= config.p_noise) return out;
  const NoiseOp op = config.enabled_ops[uniform_index(rng, config.enabled_ops.size())];
  try {
    out.text = apply_op(token, op, rng, config);
    out.op = op;
  } catch (const NoiseError&) {
    out.text = std::string(token);
  }
  return out;
}

std::string sample_noisy(std::string_view token, Rng& rng, const NoiseConfig& config) {
  return sample_noise(token, rng, config).text;
}

std::u32string noise_characters(std::u32string_view base, const NoiseConfig& config) {
  std::set<char32_t> chars;
  for (char32_t c : base) {
    chars.insert(c);
    chars.insert(utf8::toggle_case(c));
  }
  chars.insert(config.punctuation.begin(), config.punctuation.end());
  for (const auto& layout : config.layouts) {
    for (const auto& [key, nbrs] : layout.neighbors) {
      chars.insert(key);
      chars.insert(nbrs.begin(), nbrs.end());
    }
  }
  return std::u32string(chars.begin(), chars.end());
}

}  // namespace c2sw
