#include "varade/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "varade/errors.hpp"

namespace varade {

namespace {

constexpr std::array<char, 4> kVaradeMagic{'V', 'R', 'D', 'E'};
constexpr std::array<char, 4> kKnnMagic{'V', 'K', 'N', 'N'};
constexpr std::array<char, 4> kForestMagic{'V', 'I', 'F', 'O'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void magic(const std::array<char, 4>& m) { out_.write(m.data(), 4); }

  template <typename T>
  void scalar(T value) {
    using Bits = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    static_assert(sizeof(T) == sizeof(Bits));
    const auto bits = std::bit_cast<Bits>(value);
    char bytes[sizeof(Bits)];
    for (std::size_t i = 0; i < sizeof(Bits); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out_.write(bytes, sizeof bytes);
  }

  void floats(const float* data, Index n) {
    for (Index i = 0; i < n; ++i) scalar(data[i]);
  }

  void normalizer(const Normalizer& norm) {
    floats(norm.min().data(), norm.min().size());
    floats(norm.max().data(), norm.max().size());
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::array<char, 4> magic() {
    std::array<char, 4> m{};
    read(m.data(), 4);
    return m;
  }

  template <typename T>
  T scalar() {
    using Bits = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    unsigned char bytes[sizeof(Bits)];
    read(reinterpret_cast<char*>(bytes), sizeof bytes);
    Bits bits = 0;
    for (std::size_t i = 0; i < sizeof(Bits); ++i) bits |= static_cast<Bits>(bytes[i]) << (8 * i);
    return std::bit_cast<T>(bits);
  }

  void floats(float* data, Index n) {
    for (Index i = 0; i < n; ++i) data[i] = scalar<float>();
  }

  Normalizer normalizer(Index channels) {
    Vector<float> lo(channels), hi(channels);
    floats(lo.data(), channels);
    floats(hi.data(), channels);
    return Normalizer(std::move(lo), std::move(hi));
  }

  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw FormatError("checkpoint: trailing bytes");
  }

 private:
  void read(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError("checkpoint: truncated file");
  }

  std::istream& in_;
};

// Caps guarding allocations against corrupt headers.
constexpr std::uint64_t kMaxExtent = 1u << 24;

std::uint32_t bounded(std::uint32_t v, const char* what) {
  if (v == 0 || v > kMaxExtent) throw FormatError(std::string("checkpoint: implausible ") + what);
  return v;
}

void write_varade(Writer& w, const VaradeCheckpoint& ck) {
  const auto& cfg = ck.model.config;
  w.magic(kVaradeMagic);
  w.scalar(kCheckpointVersion);
  w.scalar(static_cast<std::uint32_t>(cfg.window));
  w.scalar(static_cast<std::uint32_t>(cfg.channels));
  w.scalar(static_cast<std::uint32_t>(cfg.base_maps));
  w.scalar(cfg.lambda);
  w.scalar(cfg.logvar_min);
  w.scalar(cfg.logvar_max);
  w.normalizer(ck.normalizer);
  for (const auto* p : ck.model.parameters()) w.floats(p->data(), p->size());
}

VaradeCheckpoint read_varade(Reader& r) {
  VaradeConfig cfg;
  cfg.window = bounded(r.scalar<std::uint32_t>(), "window");
  cfg.channels = bounded(r.scalar<std::uint32_t>(), "channel count");
  cfg.base_maps = bounded(r.scalar<std::uint32_t>(), "base_maps");
  cfg.lambda = r.scalar<double>();
  cfg.logvar_min = r.scalar<double>();
  cfg.logvar_max = r.scalar<double>();
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: invalid config: ") + e.what());
  }
  VaradeCheckpoint ck{build_zero<float>(cfg), r.normalizer(cfg.channels)};
  for (auto* p : ck.model.parameters()) r.floats(p->data(), p->size());
  return ck;
}

void write_knn(Writer& w, const KnnCheckpoint& ck) {
  const auto& pts = ck.index.points();
  w.magic(kKnnMagic);
  w.scalar(kCheckpointVersion);
  w.scalar(static_cast<std::uint32_t>(pts.cols()));
  w.scalar(static_cast<std::uint32_t>(ck.index.k()));
  w.normalizer(ck.normalizer);
  w.scalar(static_cast<std::uint64_t>(pts.rows()));
  w.floats(pts.data(), pts.size());
}

KnnCheckpoint read_knn(Reader& r) {
  const Index channels = bounded(r.scalar<std::uint32_t>(), "channel count");
  const Index k = bounded(r.scalar<std::uint32_t>(), "k");
  auto norm = r.normalizer(channels);
  const auto n = r.scalar<std::uint64_t>();
  if (n == 0 || n > kMaxExtent * 16) throw FormatError("checkpoint: implausible point count");
  RowMatrix<float> pts(static_cast<Index>(n), channels);
  r.floats(pts.data(), pts.size());
  try {
    return {KnnIndex::fit(std::move(pts), k), std::move(norm)};
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

void write_forest(Writer& w, const IForestCheckpoint& ck) {
  const auto& f = ck.forest;
  w.magic(kForestMagic);
  w.scalar(kCheckpointVersion);
  w.scalar(static_cast<std::uint32_t>(f.dimension()));
  w.scalar(static_cast<std::uint32_t>(f.subsample()));
  w.scalar(f.contamination());
  w.scalar(f.threshold());
  w.normalizer(ck.normalizer);
  w.scalar(static_cast<std::uint32_t>(f.trees().size()));
  for (const auto& tree : f.trees()) {
    w.scalar(static_cast<std::uint32_t>(tree.nodes.size()));
    for (const auto& n : tree.nodes) {
      w.scalar(n.feature);
      w.scalar(n.split);
      w.scalar(n.left);
      w.scalar(n.right);
      w.scalar(n.size);
      w.scalar(n.depth);
    }
  }
}

IForestCheckpoint read_forest(Reader& r) {
  const Index dim = bounded(r.scalar<std::uint32_t>(), "channel count");
  const Index subsample = bounded(r.scalar<std::uint32_t>(), "subsample");
  const double contamination = r.scalar<double>();
  const double threshold = r.scalar<double>();
  auto norm = r.normalizer(dim);
  const auto count = bounded(r.scalar<std::uint32_t>(), "tree count");
  std::vector<IsoTree> trees(count);
  for (auto& tree : trees) {
    const auto nodes = bounded(r.scalar<std::uint32_t>(), "node count");
    tree.nodes.resize(nodes);
    for (auto& n : tree.nodes) {
      n.feature = r.scalar<std::int32_t>();
      n.split = r.scalar<float>();
      n.left = r.scalar<std::int32_t>();
      n.right = r.scalar<std::int32_t>();
      n.size = r.scalar<std::int32_t>();
      n.depth = r.scalar<std::int32_t>();
    }
    const auto valid_child = [&](std::int32_t c) { return c > 0 && c < static_cast<std::int32_t>(nodes); };
    for (const auto& n : tree.nodes)
      if (n.feature >= dim || (n.feature >= 0 && (!valid_child(n.left) || !valid_child(n.right))))
        throw FormatError("checkpoint: corrupt isolation tree");
  }
  return {IsoForest::from_parts(std::move(trees), subsample, dim, contamination, threshold),
          std::move(norm)};
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
  Writer w(out);
  std::visit(
      [&w](const auto& ck) {
        using T = std::decay_t<decltype(ck)>;
        if constexpr (std::is_same_v<T, VaradeCheckpoint>)
          write_varade(w, ck);
        else if constexpr (std::is_same_v<T, KnnCheckpoint>)
          write_knn(w, ck);
        else
          write_forest(w, ck);
      },
      checkpoint);
  if (!out) throw FormatError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  Reader r(in);
  const auto magic = r.magic();
  const auto version = r.scalar<std::uint32_t>();
  if (magic != kVaradeMagic && magic != kKnnMagic && magic != kForestMagic)
    throw FormatError("checkpoint: unknown magic '" + std::string(magic.data(), 4) + "'");
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported format version " + std::to_string(version));
  Checkpoint ck = magic == kVaradeMagic ? Checkpoint{read_varade(r)}
                  : magic == kKnnMagic  ? Checkpoint{read_knn(r)}
                                        : Checkpoint{read_forest(r)};
  r.expect_end();
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("checkpoint: cannot write " + path.string());
  write_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open " + path.string());
  return read_checkpoint(in);
}

const Normalizer& normalizer_of(const Checkpoint& checkpoint) {
  return std::visit([](const auto& ck) -> const Normalizer& { return ck.normalizer; }, checkpoint);
}

Index channels_of(const Checkpoint& checkpoint) { return normalizer_of(checkpoint).channels(); }

}  // namespace varade
