#include "rscw/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace rscw {
namespace {

// ---------------------------------------------------------------------------
// Little-endian byte stream primitives

void put_u8(std::vector<std::uint8_t>& o, std::uint8_t v) { o.push_back(v); }

void put_u16(std::vector<std::uint8_t>& o, std::uint16_t v) {
  o.push_back(static_cast<std::uint8_t>(v));
  o.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& o, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) o.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& o, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) o.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_i32(std::vector<std::uint8_t>& o, std::int32_t v) {
  put_u32(o, static_cast<std::uint32_t>(v));
}

void put_f32(std::vector<std::uint8_t>& o, float v) {
  put_u32(o, std::bit_cast<std::uint32_t>(v));
}

void put_f64(std::vector<std::uint8_t>& o, double v) {
  put_u64(o, std::bit_cast<std::uint64_t>(v));
}

void put_magic(std::vector<std::uint8_t>& o, const char* magic) {
  for (int i = 0; i < 4; ++i) o.push_back(static_cast<std::uint8_t>(magic[i]));
}

// Bit i of the vector lands in byte i/8 at bit position i%8; the field is
// padded to a whole number of bytes.
void put_bitvec(std::vector<std::uint8_t>& o, const BitVec& v) {
  const std::size_t bytes = (v.size() + 7) / 8;
  for (std::size_t b = 0; b < bytes; ++b) {
    std::uint8_t byte = 0;
    for (std::size_t j = 0; j < 8; ++j) {
      const std::size_t i = 8 * b + j;
      if (i < v.size() && v.get(i)) byte |= static_cast<std::uint8_t>(1u << j);
    }
    o.push_back(byte);
  }
}

void put_syndrome(std::vector<std::uint8_t>& o, const SyndromeArray& s) {
  const std::size_t n = s.bits.size();
  for (std::size_t b = 0; b < (n + 7) / 8; ++b) {
    std::uint8_t byte = 0;
    for (std::size_t j = 0; j < 8 && 8 * b + j < n; ++j)
      if (s.bits[8 * b + j]) byte |= static_cast<std::uint8_t>(1u << j);
    o.push_back(byte);
  }
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, std::string what)
      : b_(b), what_(std::move(what)) {}

  [[noreturn]] void fail(const std::string& why) const {
    throw std::runtime_error(what_ + ": " + why);
  }

  const std::uint8_t* take(std::size_t n) {
    if (pos_ + n > b_.size()) fail("truncated file");
    const std::uint8_t* p = b_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::uint8_t u8() { return *take(1); }

  std::uint16_t u16() {
    const auto* p = take(2);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }

  std::uint32_t u32() {
    const auto* p = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }

  std::uint64_t u64() {
    const auto* p = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }

  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  void magic(const char* m) {
    const auto* p = take(4);
    if (std::memcmp(p, m, 4) != 0) fail("bad magic (not a " + std::string(m) + " file)");
  }

  BitVec bits(std::size_t n) {
    const auto* p = take((n + 7) / 8);
    BitVec v(n);
    for (std::size_t i = 0; i < n; ++i)
      if ((p[i / 8] >> (i % 8)) & 1) v.set(i);
    return v;
  }

  SyndromeArray syndrome(int rounds, int n_stab) {
    SyndromeArray s(rounds, n_stab);
    const std::size_t n = s.bits.size();
    const auto* p = take((n + 7) / 8);
    for (std::size_t i = 0; i < n; ++i)
      s.bits[i] = static_cast<std::uint8_t>((p[i / 8] >> (i % 8)) & 1);
    return s;
  }

  void done() const {
    if (pos_ != b_.size()) fail("trailing bytes after the declared payload");
  }

 private:
  const std::vector<std::uint8_t>& b_;
  std::string what_;
  std::size_t pos_ = 0;
};

constexpr std::uint16_t kVersion = 1;

int stab_count(int L) { return (L * L - 1) / 2; }

void need(bool ok, const Reader& r, const std::string& why) {
  if (!ok) r.fail(why);
}

}  // namespace

// ---------------------------------------------------------------------------
// Raw file plumbing

std::vector<std::uint8_t> load_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  std::vector<std::uint8_t> b((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
  if (in.bad()) throw std::runtime_error(path + ": read error");
  return b;
}

void save_bytes(const std::string& path, const std::vector<std::uint8_t>& b) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(b.data()),
            static_cast<std::streamsize>(b.size()));
  out.flush();
  if (!out.good()) throw std::runtime_error(path + ": write error");
}

void save_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << text;
  out.flush();
  if (!out.good()) throw std::runtime_error(path + ": write error");
}

std::string load_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  std::string s((std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>());
  if (in.bad()) throw std::runtime_error(path + ": read error");
  return s;
}

// ---------------------------------------------------------------------------
// Pure-error tables ("RSCL")

std::vector<std::uint8_t> serialize_pure_error_table(const PureErrorTable& t) {
  const int L = t.distance;
  if (L < 3 || L % 2 == 0) throw std::invalid_argument("bad table distance");
  if (t.rows.size() != static_cast<std::size_t>(stab_count(L)))
    throw std::invalid_argument("table row count does not match its distance");
  std::vector<std::uint8_t> o;
  put_magic(o, "RSCL");
  put_u16(o, kVersion);
  put_u16(o, static_cast<std::uint16_t>(L));
  put_u8(o, static_cast<std::uint8_t>(t.type));
  while (o.size() < 16) put_u8(o, 0);  // pad the header to 16 bytes
  for (const auto& row : t.rows) {
    if (row.size() != static_cast<std::size_t>(L) * L)
      throw std::invalid_argument("table row width does not match distance");
    put_bitvec(o, row);
  }
  return o;
}

PureErrorTable parse_pure_error_table(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes, "pure-error table");
  r.magic("RSCL");
  need(r.u16() == kVersion, r, "unsupported version");
  const int L = r.u16();
  need(L >= 3 && L % 2 == 1 && L <= 255, r, "bad distance");
  const int type = r.u8();
  need(type <= 1, r, "bad stabilizer type tag");
  for (int i = 9; i < 16; ++i) r.u8();
  PureErrorTable t;
  t.type = static_cast<StabType>(type);
  t.distance = L;
  for (int k = 0; k < stab_count(L); ++k)
    t.rows.push_back(r.bits(static_cast<std::size_t>(L) * L));
  r.done();
  return t;
}

void save_pure_error_table(const std::string& path, const PureErrorTable& t) {
  save_bytes(path, serialize_pure_error_table(t));
}

PureErrorTable load_pure_error_table(const std::string& path) {
  return parse_pure_error_table(load_bytes(path));
}

// ---------------------------------------------------------------------------
// Datasets ("RSCD")

std::vector<std::uint8_t> serialize_dataset(const Dataset& d) {
  const int L = d.distance, T = d.rounds;
  const int m = stab_count(L), n = L * L;
  std::vector<std::uint8_t> o;
  put_magic(o, "RSCD");
  put_u16(o, kVersion);
  put_u16(o, static_cast<std::uint16_t>(L));
  put_u16(o, static_cast<std::uint16_t>(T));
  put_f64(o, d.params.p_storage);
  put_f64(o, d.params.p_gate);
  put_f64(o, d.params.p_meas);
  put_u64(o, d.samples.size());
  for (const auto& s : d.samples) {
    for (int t = 0; t < 2; ++t) {
      if (s.syndromes[t].rounds != T || s.syndromes[t].n_stab != m)
        throw std::invalid_argument("sample syndrome shape mismatch");
      put_syndrome(o, s.syndromes[t]);
    }
    if (s.residual.n != static_cast<std::size_t>(n))
      throw std::invalid_argument("sample residual size mismatch");
    put_bitvec(o, s.residual.x_bits);
    put_bitvec(o, s.residual.z_bits);
    put_u8(o, static_cast<std::uint8_t>((s.label_class[0] & 1) |
                                        ((s.label_class[1] & 1) << 1)));
    for (int t = 0; t < 2; ++t) {
      if (s.label_s[t].size() != static_cast<std::size_t>(m))
        throw std::invalid_argument("sample label syndrome size mismatch");
      put_bitvec(o, s.label_s[t]);
    }
  }
  return o;
}

Dataset parse_dataset(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes, "dataset");
  r.magic("RSCD");
  need(r.u16() == kVersion, r, "unsupported version");
  Dataset d;
  d.distance = r.u16();
  d.rounds = r.u16();
  need(d.distance >= 3 && d.distance % 2 == 1, r, "bad distance");
  need(d.rounds >= 1, r, "bad round count");
  d.params.p_storage = r.f64();
  d.params.p_gate = r.f64();
  d.params.p_meas = r.f64();
  const std::uint64_t count = r.u64();
  const int m = stab_count(d.distance), n = d.distance * d.distance;
  for (std::uint64_t i = 0; i < count; ++i) {
    LabeledSample s;
    s.syndromes[0] = r.syndrome(d.rounds, m);
    s.syndromes[1] = r.syndrome(d.rounds, m);
    s.residual = PauliOperator(n);
    s.residual.x_bits = r.bits(n);
    s.residual.z_bits = r.bits(n);
    const std::uint8_t cls = r.u8();
    need(cls <= 3, r, "bad class byte");
    s.label_class = {cls & 1, (cls >> 1) & 1};
    s.label_s[0] = r.bits(m);
    s.label_s[1] = r.bits(m);
    d.samples.push_back(std::move(s));
  }
  r.done();
  return d;
}

void save_dataset(const std::string& path, const Dataset& d) {
  save_bytes(path, serialize_dataset(d));
}

Dataset load_dataset(const std::string& path) {
  return parse_dataset(load_bytes(path));
}

// ---------------------------------------------------------------------------
// Network weights ("MTLW")

namespace {

void put_spec(std::vector<std::uint8_t>& o, const NetworkSpec& s) {
  put_u8(o, static_cast<std::uint8_t>(s.type));
  put_u8(o, static_cast<std::uint8_t>(s.hidden_act.kind));
  put_f64(o, s.hidden_act.slope);
  for (int d : s.input) put_u16(o, static_cast<std::uint16_t>(d));
  put_u16(o, static_cast<std::uint16_t>(s.convs.size()));
  for (const auto& c : s.convs) {
    put_u16(o, static_cast<std::uint16_t>(c.in_ch));
    put_u16(o, static_cast<std::uint16_t>(c.out_ch));
    for (int k : c.kernel) put_u16(o, static_cast<std::uint16_t>(k));
  }
  put_u32(o, static_cast<std::uint32_t>(s.feature_width));
  put_u32(o, static_cast<std::uint32_t>(s.head_hidden));
  put_u16(o, static_cast<std::uint16_t>(s.piece_sizes.size()));
  for (int p : s.piece_sizes) put_u8(o, static_cast<std::uint8_t>(p));
}

NetworkSpec read_spec(Reader& r) {
  NetworkSpec s;
  const int type = r.u8();
  need(type <= 1, r, "bad network type tag");
  s.type = static_cast<StabType>(type);
  const int act = r.u8();
  need(act <= 1, r, "bad activation tag");
  s.hidden_act.kind = static_cast<ActivationSpec::Kind>(act);
  s.hidden_act.slope = r.f64();
  for (int i = 0; i < 3; ++i) s.input[i] = r.u16();
  const int nc = r.u16();
  for (int l = 0; l < nc; ++l) {
    Conv3dSpec c;
    c.in_ch = r.u16();
    c.out_ch = r.u16();
    for (int i = 0; i < 3; ++i) c.kernel[i] = r.u16();
    s.convs.push_back(c);
  }
  s.feature_width = static_cast<int>(r.u32());
  s.head_hidden = static_cast<int>(r.u32());
  const int np = r.u16();
  for (int i = 0; i < np; ++i) s.piece_sizes.push_back(r.u8());
  return s;
}

void put_float_layer(std::vector<std::uint8_t>& o, const LayerW<float>& l,
                     bool conv) {
  put_u8(o, conv ? 0 : 1);  // layer kind
  put_u32(o, static_cast<std::uint32_t>(l.w.rows()));
  put_u32(o, static_cast<std::uint32_t>(l.w.cols()));
  put_f32(o, 0.0f);  // weight scale: unused in the float variant
  for (Eigen::Index r = 0; r < l.w.rows(); ++r)
    for (Eigen::Index c = 0; c < l.w.cols(); ++c) put_f32(o, l.w(r, c));
  for (Eigen::Index i = 0; i < l.b.size(); ++i) put_f32(o, l.b[i]);
  put_i32(o, 0);  // rescale multiplier: unused
  put_u8(o, 0);   // rescale shift: unused
}

LayerW<float> read_float_layer(Reader& r, bool conv) {
  const int kind = r.u8();
  need(kind == (conv ? 0 : 1), r, "layer kind does not match the network");
  const std::uint32_t rows = r.u32(), cols = r.u32();
  need(rows > 0 && cols > 0 && rows < (1u << 24) && cols < (1u << 24), r,
       "bad layer dimensions");
  r.f32();
  LayerW<float> l;
  l.w.resize(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) l.w(i, j) = r.f32();
  l.b.resize(rows);
  for (std::uint32_t i = 0; i < rows; ++i) l.b[i] = r.f32();
  r.i32();
  r.u8();
  return l;
}

void put_qlayer(std::vector<std::uint8_t>& o, const QLayer& q) {
  put_u8(o, static_cast<std::uint8_t>(q.kind));
  put_u8(o, q.activate ? 1 : 0);
  put_u32(o, static_cast<std::uint32_t>(q.conv.in_ch));
  put_u32(o, static_cast<std::uint32_t>(q.conv.out_ch));
  for (int k : q.conv.kernel) put_u32(o, static_cast<std::uint32_t>(k));
  for (int d : q.in_dims) put_u32(o, static_cast<std::uint32_t>(d));
  put_u32(o, static_cast<std::uint32_t>(q.in_size));
  put_u32(o, static_cast<std::uint32_t>(q.out_size));
  put_f32(o, q.weight_scale);
  put_f32(o, q.in_scale);
  put_f32(o, q.out_scale);
  put_u64(o, q.w.size());
  for (auto v : q.w) put_u8(o, static_cast<std::uint8_t>(v));
  put_u64(o, q.bias.size());
  for (auto v : q.bias) put_i32(o, v);
  put_i32(o, q.mult);
  put_u8(o, static_cast<std::uint8_t>(q.shift));
}

QLayer read_qlayer(Reader& r) {
  QLayer q;
  const int kind = r.u8();
  need(kind <= 1, r, "bad layer kind");
  q.kind = static_cast<QLayer::Kind>(kind);
  q.activate = r.u8() != 0;
  q.conv.in_ch = static_cast<int>(r.u32());
  q.conv.out_ch = static_cast<int>(r.u32());
  for (int i = 0; i < 3; ++i) q.conv.kernel[i] = static_cast<int>(r.u32());
  for (int i = 0; i < 4; ++i) q.in_dims[i] = static_cast<int>(r.u32());
  q.in_size = static_cast<int>(r.u32());
  q.out_size = static_cast<int>(r.u32());
  q.weight_scale = r.f32();
  q.in_scale = r.f32();
  q.out_scale = r.f32();
  const std::uint64_t wn = r.u64();
  need(wn < (1ull << 32), r, "oversized weight payload");
  q.w.resize(wn);
  for (std::uint64_t i = 0; i < wn; ++i)
    q.w[i] = static_cast<std::int8_t>(r.u8());
  const std::uint64_t bn = r.u64();
  need(bn < (1ull << 24), r, "oversized bias payload");
  q.bias.resize(bn);
  for (std::uint64_t i = 0; i < bn; ++i) q.bias[i] = r.i32();
  q.mult = r.i32();
  q.shift = r.u8();
  return q;
}

}  // namespace

std::vector<std::uint8_t> serialize_network(const NetworkFile& f) {
  f.spec.validate();
  const int m = f.spec.syndrome_bits();
  const int layer_count =
      static_cast<int>(f.spec.convs.size()) + 1 + 2 * f.spec.n_heads();
  std::vector<std::uint8_t> o;
  put_magic(o, "MTLW");
  put_u16(o, kVersion);
  put_u16(o, static_cast<std::uint16_t>(f.distance));
  put_u16(o, static_cast<std::uint16_t>(f.rounds));
  put_u16(o, static_cast<std::uint16_t>(m));
  put_u16(o, static_cast<std::uint16_t>(layer_count));
  put_u8(o, f.quantized ? 1 : 0);
  put_spec(o, f.spec);
  if (!f.quantized) {
    const auto& w = f.weights;
    if (w.convs.size() != f.spec.convs.size() ||
        w.heads.size() != static_cast<std::size_t>(f.spec.n_heads()))
      throw std::invalid_argument("weights do not match the network shape");
    for (const auto& c : w.convs) put_float_layer(o, c, true);
    put_float_layer(o, w.frontend, false);
    for (const auto& h : w.heads) {
      put_float_layer(o, h.l1, false);
      put_float_layer(o, h.l2, false);
    }
  } else {
    const auto& q = f.qnet;
    if (q.frontend.size() != f.spec.convs.size() + 1 ||
        q.heads.size() != static_cast<std::size_t>(f.spec.n_heads()))
      throw std::invalid_argument("layers do not match the network shape");
    for (const auto& l : q.frontend) put_qlayer(o, l);
    for (const auto& h : q.heads) {
      put_qlayer(o, h.l1);
      put_qlayer(o, h.l2);
    }
  }
  return o;
}

NetworkFile parse_network(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes, "network file");
  r.magic("MTLW");
  need(r.u16() == kVersion, r, "unsupported version");
  NetworkFile f;
  f.distance = r.u16();
  f.rounds = r.u16();
  const int m = r.u16();
  const int layer_count = r.u16();
  f.quantized = r.u8() != 0;
  f.spec = read_spec(r);
  try {
    f.spec.validate();
  } catch (const std::exception& e) {
    r.fail(std::string("invalid network description: ") + e.what());
  }
  need(m == f.spec.syndrome_bits(), r,
       "syndrome bit count does not match the network description");
  need(f.distance >= 3 && f.distance % 2 == 1, r, "bad distance");
  need(m == stab_count(f.distance), r,
       "syndrome bit count does not match the distance");
  need(f.rounds == f.spec.input[0], r,
       "round count does not match the network input window");
  need(layer_count == static_cast<int>(f.spec.convs.size()) + 1 +
                          2 * f.spec.n_heads(),
       r, "layer count does not match the network description");
  if (!f.quantized) {
    for (std::size_t l = 0; l < f.spec.convs.size(); ++l)
      f.weights.convs.push_back(read_float_layer(r, true));
    f.weights.frontend = read_float_layer(r, false);
    for (int h = 0; h < f.spec.n_heads(); ++h) {
      Weights<float>::Head head;
      head.l1 = read_float_layer(r, false);
      head.l2 = read_float_layer(r, false);
      f.weights.heads.push_back(std::move(head));
    }
  } else {
    f.qnet.spec = f.spec;
    for (std::size_t l = 0; l < f.spec.convs.size() + 1; ++l)
      f.qnet.frontend.push_back(read_qlayer(r));
    for (int h = 0; h < f.spec.n_heads(); ++h) {
      QuantizedNetwork::QHead head;
      head.l1 = read_qlayer(r);
      head.l2 = read_qlayer(r);
      f.qnet.heads.push_back(std::move(head));
    }
  }
  r.done();
  return f;
}

void save_network(const std::string& path, const NetworkFile& f) {
  save_bytes(path, serialize_network(f));
}

NetworkFile load_network(const std::string& path) {
  return parse_network(load_bytes(path));
}

// ---------------------------------------------------------------------------
// Distance-3 lookup table ("L3LU")

std::vector<std::uint8_t> serialize_l3_lut(const L3Lut& lut) {
  if (lut.distance != 3 || lut.rounds != 3)
    throw std::invalid_argument("the table format is fixed to L=3, T=3");
  std::vector<std::uint8_t> o;
  put_magic(o, "L3LU");
  put_u8(o, lut.preset_id);
  put_u8(o, static_cast<std::uint8_t>(lut.rounds));
  for (const auto& side : lut.table) {
    if (side.size() != 4096)
      throw std::invalid_argument("table side must hold 4096 entries");
    for (const auto& e : side) {
      put_u8(o, e.class_bit);
      put_u8(o, e.s);
      put_u32(o, e.count);
    }
  }
  return o;
}

L3Lut parse_l3_lut(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes, "lookup table");
  r.magic("L3LU");
  L3Lut lut;
  lut.preset_id = r.u8();
  lut.rounds = r.u8();
  need(lut.rounds == 3, r, "the table format is fixed to T=3");
  for (auto& side : lut.table) {
    side.resize(4096);
    for (auto& e : side) {
      e.class_bit = r.u8();
      need(e.class_bit <= 1, r, "bad class bit");
      e.s = r.u8();
      need(e.s < 16, r, "bad packed syndrome");
      e.count = r.u32();
    }
  }
  r.done();
  return lut;
}

void save_l3_lut(const std::string& path, const L3Lut& lut) {
  save_bytes(path, serialize_l3_lut(lut));
}

L3Lut load_l3_lut(const std::string& path) {
  return parse_l3_lut(load_bytes(path));
}

// ---------------------------------------------------------------------------
// Engine programs ("NPEP")

namespace {

void put_instruction(std::vector<std::uint8_t>& o, const NpeInstruction& i) {
  put_u8(o, i.opcode);
  put_u8(o, i.tap);
  put_u16(o, i.d0);
  put_u16(o, i.d1);
  put_u16(o, i.d2);
  put_u16(o, i.ra);
  put_u16(o, i.rb);
  put_u32(o, i.maddr);
}

NpeInstruction read_instruction(Reader& r) {
  NpeInstruction i;
  i.opcode = r.u8();
  i.tap = r.u8();
  i.d0 = r.u16();
  i.d1 = r.u16();
  i.d2 = r.u16();
  i.ra = r.u16();
  i.rb = r.u16();
  i.maddr = r.u32();
  return i;
}

}  // namespace

std::vector<std::uint8_t> serialize_npe_program(const NpeProgram& p) {
  std::vector<std::uint8_t> o;
  put_magic(o, "NPEP");
  put_u16(o, kVersion);
  put_u16(o, 0);  // reserved
  put_u32(o, static_cast<std::uint32_t>(p.config.mau_count));
  put_u32(o, static_cast<std::uint32_t>(p.config.mau_width));
  put_u32(o, static_cast<std::uint32_t>(p.config.register_file_size));
  put_u32(o, static_cast<std::uint32_t>(p.config.memory_read_latency_cycles));
  put_f64(o, p.config.clock_frequency_hz);
  put_u64(o, p.stream.size());
  for (const auto& i : p.stream) put_instruction(o, i);
  return o;
}

NpeProgramFile parse_npe_program(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes, "engine program");
  r.magic("NPEP");
  need(r.u16() == kVersion, r, "unsupported version");
  r.u16();
  NpeProgramFile f;
  f.config.mau_count = static_cast<int>(r.u32());
  f.config.mau_width = static_cast<int>(r.u32());
  f.config.register_file_size = static_cast<int>(r.u32());
  f.config.memory_read_latency_cycles = static_cast<int>(r.u32());
  f.config.clock_frequency_hz = r.f64();
  try {
    f.config.validate();
  } catch (const std::exception& e) {
    r.fail(std::string("invalid machine config: ") + e.what());
  }
  const std::uint64_t n = r.u64();
  need(n < (1ull << 32), r, "oversized stream");
  for (std::uint64_t i = 0; i < n; ++i)
    f.stream.push_back(read_instruction(r));
  r.done();
  return f;
}

void save_npe_program(const std::string& path, const NpeProgram& p) {
  save_bytes(path, serialize_npe_program(p));
}

NpeProgramFile read_npe_program(const std::string& path) {
  return parse_npe_program(load_bytes(path));
}

NpeProgram load_npe_program(const std::string& path, const NetworkSpec& spec,
                            const QuantizedNetwork& qnet) {
  const NpeProgramFile f = read_npe_program(path);
  NpeProgram p = compile(spec, qnet, f.config);
  const bool same =
      p.stream.size() == f.stream.size() &&
      std::memcmp(p.stream.data(), f.stream.data(),
                  p.stream.size() * sizeof(NpeInstruction)) == 0;
  if (!same)
    throw std::runtime_error(
        path + ": program stream does not match the supplied network "
               "parameters under the echoed machine config");
  return p;
}

}  // namespace rscw
