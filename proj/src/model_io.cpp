#include "graphboost/model_io.hpp"

#include <bit>
#include <fstream>
#include <sstream>

namespace graphboost {
namespace {

constexpr std::string_view kMagic = "GBST";

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int b = 0; b < 4; ++b) u8(static_cast<std::uint8_t>(v >> (8 * b)));
  }
  void u64(std::uint64_t v) {
    for (int b = 0; b < 8; ++b) u8(static_cast<std::uint8_t>(v >> (8 * b)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void tensor(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
  }
  void tensor(const Vector& v) { tensor(Matrix(v)); }
  void raw(std::string_view s) { buf_.append(s); }
  const std::string& bytes() const { return buf_; }

  void section(std::string_view tag, const Writer& payload) {
    raw(tag);
    u64(payload.bytes().size());
    raw(payload.bytes());
  }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(u8()) << (8 * b);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(u8()) << (8 * b);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view raw(std::size_t n) {
    need(n);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::string str() { return std::string(raw(u32())); }
  Matrix tensor() {
    const std::uint64_t rows = u64(), cols = u64();
    if (cols != 0 && rows > remaining() / 8 / cols) throw ModelError("model file: tensor exceeds file size");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
    return m;
  }
  Vector vector() {
    Matrix m = tensor();
    if (m.cols() != 1) throw ModelError("model file: expected a column tensor");
    return Vector(m.col(0));
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw ModelError("model file is truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

void write_config(Writer& w, const AppnpConfig& c) {
  w.u64(c.hidden);
  w.u64(c.propagation_steps);
  w.f64(c.teleport);
  w.f64(c.dropout);
  w.f64(c.learning_rate);
  w.f64(c.weight_decay);
  w.u64(c.max_epochs);
  w.u64(c.patience);
  w.u64(c.seed);
}

AppnpConfig read_config(Reader& r) {
  AppnpConfig c;
  c.hidden = r.u64();
  c.propagation_steps = r.u64();
  c.teleport = r.f64();
  c.dropout = r.f64();
  c.learning_rate = r.f64();
  c.weight_decay = r.f64();
  c.max_epochs = r.u64();
  c.patience = r.u64();
  c.seed = r.u64();
  return c;
}

}  // namespace

std::string serialize_model(const Ensemble& e) {
  Writer meta;
  meta.u32(static_cast<std::uint32_t>(e.num_classes));
  meta.u64(static_cast<std::uint64_t>(e.reference.cols()));
  meta.u64(e.rounds.size());

  Writer enc;
  enc.str(e.encoder.label_name);
  enc.u32(static_cast<std::uint32_t>(e.encoder.classes.size()));
  for (const auto& c : e.encoder.classes) enc.str(c);
  enc.u32(static_cast<std::uint32_t>(e.encoder.columns.size()));
  for (const auto& col : e.encoder.columns) {
    enc.str(col.name);
    enc.u8(static_cast<std::uint8_t>(col.kind));
    enc.f64(col.impute);
    enc.f64(col.mean);
    enc.f64(col.sd);
    enc.u32(static_cast<std::uint32_t>(col.categories.size()));
    for (const auto& cat : col.categories) enc.str(cat);
  }

  Writer refs;
  refs.tensor(e.reference);

  Writer rounds;
  rounds.u32(static_cast<std::uint32_t>(e.rounds.size()));
  for (const auto& r : e.rounds) {
    rounds.u64(r.feature);
    rounds.f64(r.gamma);
    rounds.u8(r.expert ? 1 : 0);
    rounds.f64(r.alpha);
    rounds.f64(r.error);
    write_config(rounds, r.model.config);
    rounds.tensor(r.model.w1);
    rounds.tensor(r.model.b1);
    rounds.tensor(r.model.w2);
    rounds.tensor(r.model.b2);
  }

  Writer out;
  out.raw(kMagic);
  out.u32(kModelFormatVersion);
  out.section("META", meta);
  out.section("ENCD", enc);
  out.section("REFS", refs);
  out.section("RNDS", rounds);
  return out.bytes();
}

Ensemble deserialize_model(std::string_view bytes) {
  Reader in(bytes);
  if (bytes.size() < 8 || in.raw(4) != kMagic) throw ModelError("not a model file (bad magic)");
  const std::uint32_t version = in.u32();
  if (version != kModelFormatVersion)
    throw ModelError("unsupported model format version " + std::to_string(version) + " (expected " +
                     std::to_string(kModelFormatVersion) + ")");

  auto section = [&](std::string_view tag) {
    const auto found = in.raw(4);
    if (found != tag)
      throw ModelError("model file: expected section " + std::string(tag) + ", found " + std::string(found));
    return Reader(in.raw(in.u64()));
  };

  Ensemble e;
  Reader meta = section("META");
  e.num_classes = static_cast<int>(meta.u32());
  const std::uint64_t features = meta.u64();
  const std::uint64_t round_count = meta.u64();

  Reader enc = section("ENCD");
  e.encoder.label_name = enc.str();
  for (std::uint32_t c = enc.u32(); c > 0; --c) e.encoder.classes.push_back(enc.str());
  for (std::uint32_t c = enc.u32(); c > 0; --c) {
    ColumnEncoding col;
    col.name = enc.str();
    const std::uint8_t kind = enc.u8();
    if (kind > 1) throw ModelError("model file: unknown column kind");
    col.kind = static_cast<ColumnKind>(kind);
    col.impute = enc.f64();
    col.mean = enc.f64();
    col.sd = enc.f64();
    for (std::uint32_t k = enc.u32(); k > 0; --k) col.categories.push_back(enc.str());
    e.encoder.columns.push_back(std::move(col));
  }

  Reader refs = section("REFS");
  e.reference = refs.tensor();

  Reader rounds = section("RNDS");
  for (std::uint32_t r = rounds.u32(); r > 0; --r) {
    WeakRound w;
    w.feature = rounds.u64();
    w.gamma = rounds.f64();
    w.expert = rounds.u8() != 0;
    w.alpha = rounds.f64();
    w.error = rounds.f64();
    w.model.config = read_config(rounds);
    w.model.w1 = rounds.tensor();
    w.model.b1 = rounds.vector();
    w.model.w2 = rounds.tensor();
    w.model.b2 = rounds.vector();
    e.rounds.push_back(std::move(w));
  }

  if (!in.done() || !meta.done() || !enc.done() || !refs.done() || !rounds.done())
    throw ModelError("model file has trailing bytes");
  if (e.num_classes < 2 || e.encoder.classes.size() != static_cast<std::size_t>(e.num_classes) ||
      e.encoder.columns.size() != features || static_cast<std::uint64_t>(e.reference.cols()) != features ||
      e.rounds.size() != round_count || e.rounds.empty())
    throw ModelError("model file is inconsistent");
  for (const auto& w : e.rounds) {
    const auto& m = w.model;
    if (w.feature >= features || static_cast<std::uint64_t>(m.w1.cols()) != features ||
        m.w1.rows() != m.b1.size() || m.w2.cols() != m.w1.rows() || m.w2.rows() != e.num_classes ||
        m.b2.size() != e.num_classes || static_cast<std::size_t>(m.w1.rows()) != m.config.hidden)
      throw ModelError("model file: round shapes are inconsistent");
  }
  return e;
}

void save_model(const std::filesystem::path& path, const Ensemble& ensemble) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot write model file: " + path.string());
  const std::string bytes = serialize_model(ensemble);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ModelError("failed writing model file: " + path.string());
}

Ensemble load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open model file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_model(buffer.str());
}

}  // namespace graphboost
