#include "c2sw/checkpoint.hpp"

#include <vector>

#include "c2sw/binary_io.hpp"
#include "c2sw/error.hpp"
#include "c2sw/file_io.hpp"

namespace c2sw {

namespace {

constexpr std::string_view kMagic = "C2SW";

std::uint32_t narrow(std::size_t v) {
  if (v > 0xFFFFFFFFu) throw Error("value too large for checkpoint field");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::string serialize_checkpoint(const Char2Subword& model) {
  const ModelConfig& cfg = model.config();
  std::string out(kMagic);
  binary::put(out, kCheckpointVersion);
  for (std::size_t v : {cfg.d_char, cfg.d_out, cfg.n_layers, cfg.n_heads, cfg.max_chars}) {
    binary::put(out, narrow(v));
  }
  binary::put(out, cfg.ln_eps);
  binary::put(out, static_cast<std::uint8_t>(cfg.standard_preln));
  binary::put(out, static_cast<std::uint8_t>(cfg.marker_on_full_words));

  const std::u32string& chars = model.alphabet().ordinary();
  binary::put(out, narrow(chars.size()));
  for (char32_t cp : chars) binary::put(out, static_cast<std::uint32_t>(cp));

  std::vector<const Matrix*> tensors;
  std::string manifest;
  for_each_tensor(model.params(), [&](const std::string& name, const Matrix& m) {
    binary::put(manifest, narrow(name.size()));
    manifest += name;
    binary::put(manifest, narrow(m.rows()));
    binary::put(manifest, narrow(m.cols()));
    tensors.push_back(&m);
  });
  binary::put(out, narrow(tensors.size()));
  out += manifest;
  for (const Matrix* m : tensors) {
    for (double v : m->data()) binary::put(out, v);
  }
  return out;
}

Char2Subword deserialize_checkpoint(const std::string& bytes) {
  binary::Reader in(bytes, "checkpoint");
  if (in.take(kMagic.size()) != kMagic) throw Error("checkpoint: bad magic, expected C2SW");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error("checkpoint: unsupported format version " + std::to_string(version));
  }
  ModelConfig cfg;
  cfg.d_char = in.get<std::uint32_t>();
  cfg.d_out = in.get<std::uint32_t>();
  cfg.n_layers = in.get<std::uint32_t>();
  cfg.n_heads = in.get<std::uint32_t>();
  cfg.max_chars = in.get<std::uint32_t>();
  cfg.ln_eps = in.get<double>();
  cfg.standard_preln = in.get<std::uint8_t>() != 0;
  cfg.marker_on_full_words = in.get<std::uint8_t>() != 0;
  cfg.validate();

  std::u32string chars(in.get<std::uint32_t>(), U'\0');
  for (char32_t& cp : chars) cp = in.get<std::uint32_t>();
  CharAlphabet alphabet(chars);
  if (alphabet.ordinary_count() != chars.size()) throw Error("checkpoint: duplicate alphabet entry");

  Char2SubwordParams params = zero_params(cfg, alphabet.size());
  const auto count = in.get<std::uint32_t>();
  struct Entry {
    std::string name;
    std::uint32_t rows, cols;
  };
  std::vector<Entry> manifest(count);
  for (auto& e : manifest) {
    e.name = std::string(in.take(in.get<std::uint32_t>()));
    e.rows = in.get<std::uint32_t>();
    e.cols = in.get<std::uint32_t>();
  }
  std::size_t index = 0;
  for_each_tensor(params, [&](const std::string& name, Matrix& m) {
    if (index >= manifest.size()) throw Error("checkpoint: missing tensor " + name);
    const Entry& e = manifest[index++];
    if (e.name != name || e.rows != m.rows() || e.cols != m.cols()) {
      throw Error("checkpoint: tensor " + e.name + " (" + std::to_string(e.rows) + "x" +
                  std::to_string(e.cols) + ") does not match expected " + name + " (" +
                  m.shape_string() + ")");
    }
  });
  if (index != manifest.size()) throw Error("checkpoint: unexpected extra tensors");
  for_each_tensor(params, [&](const std::string&, Matrix& m) {
    for (double& v : m.data()) v = in.get<double>();
  });
  if (!in.at_end()) throw Error("checkpoint: trailing bytes after payload");
  return Char2Subword(cfg, std::move(alphabet), std::move(params));
}

void save_checkpoint(const std::filesystem::path& path, const Char2Subword& model) {
  write_file(path, serialize_checkpoint(model));
}

Char2Subword load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file(path));
}

}  // namespace c2sw
