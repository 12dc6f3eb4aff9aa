#include "cipher/model_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace cipher {
namespace {

constexpr char kWeightsMagic[8] = {'C', 'P', 'H', 'R', 'W', '0', '0', '1'};
constexpr char kTableMagic[8] = {'C', 'P', 'H', 'R', 'T', '0', '0', '1'};
constexpr char kDumpMagic[8] = {'C', 'P', 'H', 'R', 'D', '0', '0', '1'};

// This project targets little-endian hosts; the on-disk format is LE by
// definition, so plain memory writes are already in wire order.
void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in, const char* what) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw FormatError(std::string("truncated file while reading ") + what);
  return v;
}

void write_floats(std::ostream& out, const std::vector<float>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void read_floats(std::istream& in, std::vector<float>& v, const char* what) {
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  if (!in) throw FormatError(std::string("truncated file while reading tensor '") + what + "'");
}

void write_tensor(std::ostream& out, const std::vector<float>& data,
                  const std::vector<std::uint32_t>& dims) {
  write_u32(out, static_cast<std::uint32_t>(dims.size()));
  std::size_t expected = 1;
  for (std::uint32_t d : dims) {
    write_u32(out, d);
    expected *= d;
  }
  if (expected != data.size()) throw ShapeError("write_tensor: dims do not match data size");
  write_floats(out, data);
}

std::vector<float> read_tensor(std::istream& in, const std::vector<std::uint32_t>& expected_dims,
                               const char* name) {
  const std::uint32_t rank = read_u32(in, name);
  if (rank != expected_dims.size()) {
    throw ShapeError(std::string("tensor '") + name + "': rank " + std::to_string(rank) +
                     ", expected " + std::to_string(expected_dims.size()));
  }
  std::size_t count = 1;
  for (std::size_t i = 0; i < expected_dims.size(); ++i) {
    const std::uint32_t dim = read_u32(in, name);
    if (dim != expected_dims[i]) {
      throw ShapeError(std::string("tensor '") + name + "': dimension " + std::to_string(i) +
                       " is " + std::to_string(dim) + ", expected " +
                       std::to_string(expected_dims[i]));
    }
    count *= dim;
  }
  std::vector<float> data(count);
  read_floats(in, data, name);
  for (float x : data) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string("tensor '") + name + "': non-finite entry");
    }
  }
  return data;
}

void check_magic(std::istream& in, const char expected[8], const char* kind) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, expected, 8) != 0) {
    throw FormatError(std::string(kind) + ": bad magic or unsupported version");
  }
}

}  // namespace
}  // namespace cipher

namespace cipher::lm {

void save_model(const std::filesystem::path& path, const TransformerConfig& config,
                const ModelWeights& weights) {
  config.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("save_model: cannot write " + path.string());

  const auto d = static_cast<std::uint32_t>(config.d_model);
  const auto ff = static_cast<std::uint32_t>(config.d_ff);
  const auto v = static_cast<std::uint32_t>(weights.token_embedding.vocab_size());

  out.write(kWeightsMagic, sizeof(kWeightsMagic));
  write_u32(out, static_cast<std::uint32_t>(config.n_layers));
  write_u32(out, static_cast<std::uint32_t>(config.n_heads));
  write_u32(out, d);
  write_u32(out, ff);
  write_u32(out, v);
  write_u32(out, static_cast<std::uint32_t>(config.max_seq_len));

  write_tensor(out, weights.token_embedding.data(), {v, d});
  write_tensor(out, weights.position_embedding, {static_cast<std::uint32_t>(config.max_seq_len), d});
  for (const auto& layer : weights.layers) {
    write_tensor(out, layer.ln1_gamma, {d});
    write_tensor(out, layer.ln1_beta, {d});
    write_tensor(out, layer.wq, {d, d});
    write_tensor(out, layer.bq, {d});
    write_tensor(out, layer.wk, {d, d});
    write_tensor(out, layer.bk, {d});
    write_tensor(out, layer.wv, {d, d});
    write_tensor(out, layer.bv, {d});
    write_tensor(out, layer.wo, {d, d});
    write_tensor(out, layer.bo, {d});
    write_tensor(out, layer.ln2_gamma, {d});
    write_tensor(out, layer.ln2_beta, {d});
    write_tensor(out, layer.w_ff1, {d, ff});
    write_tensor(out, layer.b_ff1, {ff});
    write_tensor(out, layer.w_ff2, {ff, d});
    write_tensor(out, layer.b_ff2, {d});
  }
  write_tensor(out, weights.final_ln_gamma, {d});
  write_tensor(out, weights.final_ln_beta, {d});
  write_tensor(out, weights.output_projection, {d, v});
  write_tensor(out, weights.output_bias, {v});

  if (!out) throw IoError("save_model: write failed for " + path.string());
}

LoadedModel load_model(const std::filesystem::path& path,
                       const std::optional<TransformerConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_model: cannot open " + path.string());
  check_magic(in, kWeightsMagic, "load_model");

  LoadedModel loaded;
  loaded.config.n_layers = static_cast<int>(read_u32(in, "n_layers"));
  loaded.config.n_heads = static_cast<int>(read_u32(in, "n_heads"));
  loaded.config.d_model = static_cast<int>(read_u32(in, "d_model"));
  loaded.config.d_ff = static_cast<int>(read_u32(in, "d_ff"));
  loaded.vocab_size = static_cast<int>(read_u32(in, "vocab_size"));
  loaded.config.max_seq_len = static_cast<int>(read_u32(in, "max_seq_len"));
  loaded.config.validate();

  // Shape validation runs against the caller's expectation when present; a
  // disagreeing header then fails on the first tensor it contradicts.
  const TransformerConfig& cfg = expected.has_value() ? *expected : loaded.config;
  const auto d = static_cast<std::uint32_t>(cfg.d_model);
  const auto ff = static_cast<std::uint32_t>(cfg.d_ff);
  const auto v = static_cast<std::uint32_t>(loaded.vocab_size);
  if (expected.has_value()) {
    loaded.config.layernorm_epsilon = expected->layernorm_epsilon;
    if (loaded.config.n_layers != cfg.n_layers) {
      throw ShapeError("load_model: header n_layers " + std::to_string(loaded.config.n_layers) +
                       " != expected " + std::to_string(cfg.n_layers));
    }
    if (loaded.config.n_heads != cfg.n_heads) {
      throw ShapeError("load_model: header n_heads mismatch");
    }
  }

  ModelWeights& w = loaded.weights;
  w.token_embedding = EmbeddingTable(loaded.vocab_size, static_cast<int>(d),
                                     read_tensor(in, {v, d}, "token_embedding"));
  w.position_embedding =
      read_tensor(in, {static_cast<std::uint32_t>(cfg.max_seq_len), d}, "position_embedding");
  w.layers.resize(static_cast<std::size_t>(cfg.n_layers));
  for (std::size_t li = 0; li < w.layers.size(); ++li) {
    auto& layer = w.layers[li];
    layer.ln1_gamma = read_tensor(in, {d}, "ln1_gamma");
    layer.ln1_beta = read_tensor(in, {d}, "ln1_beta");
    layer.wq = read_tensor(in, {d, d}, "wq");
    layer.bq = read_tensor(in, {d}, "bq");
    layer.wk = read_tensor(in, {d, d}, "wk");
    layer.bk = read_tensor(in, {d}, "bk");
    layer.wv = read_tensor(in, {d, d}, "wv");
    layer.bv = read_tensor(in, {d}, "bv");
    layer.wo = read_tensor(in, {d, d}, "wo");
    layer.bo = read_tensor(in, {d}, "bo");
    layer.ln2_gamma = read_tensor(in, {d}, "ln2_gamma");
    layer.ln2_beta = read_tensor(in, {d}, "ln2_beta");
    layer.w_ff1 = read_tensor(in, {d, ff}, "w_ff1");
    layer.b_ff1 = read_tensor(in, {ff}, "b_ff1");
    layer.w_ff2 = read_tensor(in, {ff, d}, "w_ff2");
    layer.b_ff2 = read_tensor(in, {d}, "b_ff2");
  }
  w.final_ln_gamma = read_tensor(in, {d}, "final_ln_gamma");
  w.final_ln_beta = read_tensor(in, {d}, "final_ln_beta");
  w.output_projection = read_tensor(in, {d, v}, "output_projection");
  w.output_bias = read_tensor(in, {v}, "output_bias");
  return loaded;
}

}  // namespace cipher::lm

namespace cipher {

void save_table(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("save_table: cannot write " + path.string());
  out.write(kTableMagic, sizeof(kTableMagic));
  write_u32(out, static_cast<std::uint32_t>(table.vocab_size()));
  write_u32(out, static_cast<std::uint32_t>(table.dim()));
  write_floats(out, table.data());
  if (!out) throw IoError("save_table: write failed for " + path.string());
}

EmbeddingTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_table: cannot open " + path.string());
  check_magic(in, kTableMagic, "load_table");
  const auto v = read_u32(in, "vocab_size");
  const auto d = read_u32(in, "dim");
  std::vector<float> data(static_cast<std::size_t>(v) * d);
  read_floats(in, data, "embedding_table");
  return EmbeddingTable(static_cast<int>(v), static_cast<int>(d), std::move(data));
}

void save_embedding_dump(const std::filesystem::path& path,
                         const std::vector<EmbeddingDumpRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("save_embedding_dump: cannot write " + path.string());
  out.write(kDumpMagic, sizeof(kDumpMagic));
  write_u32(out, static_cast<std::uint32_t>(records.size()));
  for (const auto& rec : records) {
    write_u32(out, rec.task_index);
    write_u32(out, rec.round);
    write_u32(out, rec.debater);
    write_u32(out, static_cast<std::uint32_t>(rec.vectors.size()));
    write_u32(out, static_cast<std::uint32_t>(rec.vectors.dim()));
    write_floats(out, rec.vectors.flat());
  }
  if (!out) throw IoError("save_embedding_dump: write failed for " + path.string());
}

std::vector<EmbeddingDumpRecord> load_embedding_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_embedding_dump: cannot open " + path.string());
  check_magic(in, kDumpMagic, "load_embedding_dump");
  const auto count = read_u32(in, "record_count");
  std::vector<EmbeddingDumpRecord> records;
  records.reserve(count);
  for (std::uint32_t r = 0; r < count; ++r) {
    EmbeddingDumpRecord rec;
    rec.task_index = read_u32(in, "task_index");
    rec.round = read_u32(in, "round");
    rec.debater = read_u32(in, "debater");
    const auto steps = read_u32(in, "steps");
    const auto dim = read_u32(in, "dim");
    std::vector<float> data(static_cast<std::size_t>(steps) * dim);
    read_floats(in, data, "dump_vectors");
    rec.vectors = EmbeddingSeq(static_cast<int>(dim));
    for (std::uint32_t t = 0; t < steps; ++t) {
      rec.vectors.append({data.data() + static_cast<std::size_t>(t) * dim, dim});
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace cipher
