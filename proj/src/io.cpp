#include "equisym/io.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <type_traits>

namespace equisym {

static_assert(std::endian::native == std::endian::little, "the container payload is written in native order");

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::u8: return 1;
    case DType::i32: return 4;
  }
  throw DataError("unknown dtype tag");
}

std::size_t Array::elements() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

bool Container::has(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return true;
  return false;
}

const Array& Container::get(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return a;
  throw DataError("container has no array '" + name + "'");
}

void Container::add(Array array) {
  if (has(array.name)) throw UsageError("duplicate array '" + array.name + "'");
  arrays.push_back(std::move(array));
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_bytes(std::vector<std::uint8_t>& out, const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  out.insert(out.end(), p, p + n);
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

  const std::uint8_t* take(std::size_t n) {
    if (bytes_.size() - pos_ < n) fail("truncated");
    const auto* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    const auto* p = take(4);
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
  }
  std::string string(std::size_t n) {
    const auto* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  bool done() const { return pos_ == bytes_.size(); }
  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(source_ + ": " + msg + " at byte " + std::to_string(pos_));
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_container(const Container& c) {
  std::vector<std::uint8_t> out;
  put_bytes(out, "EQSY", 4);
  put_u32(out, kContainerVersion);
  put_u32(out, static_cast<std::uint32_t>(c.text.size()));
  put_bytes(out, c.text.data(), c.text.size());
  put_u32(out, static_cast<std::uint32_t>(c.arrays.size()));
  for (const auto& a : c.arrays) {
    if (a.bytes.size() != a.elements() * dtype_size(a.dtype)) throw UsageError("array " + a.name + ": payload size");
    put_u32(out, static_cast<std::uint32_t>(a.name.size()));
    put_bytes(out, a.name.data(), a.name.size());
    out.push_back(static_cast<std::uint8_t>(a.dtype));
    put_u32(out, static_cast<std::uint32_t>(a.dims.size()));
    for (auto d : a.dims) put_u32(out, d);
    put_bytes(out, a.bytes.data(), a.bytes.size());
  }
  return out;
}

Container deserialize_container(const std::vector<std::uint8_t>& bytes, const std::string& source) {
  Reader r(bytes, source);
  if (r.string(4) != "EQSY") r.fail("not an EQSY container");
  const auto version = r.u32();
  if (version != kContainerVersion) r.fail("unsupported version " + std::to_string(version));
  Container c;
  c.text = r.string(r.u32());
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    Array a;
    a.name = r.string(r.u32());
    const auto tag = *r.take(1);
    if (tag > static_cast<std::uint8_t>(DType::i32)) r.fail("unknown dtype tag " + std::to_string(tag));
    a.dtype = static_cast<DType>(tag);
    const auto rank = r.u32();
    if (rank > 8) r.fail("implausible rank " + std::to_string(rank));
    for (std::uint32_t k = 0; k < rank; ++k) a.dims.push_back(r.u32());
    const std::size_t n = a.elements() * dtype_size(a.dtype);
    const auto* p = r.take(n);
    a.bytes.assign(p, p + n);
    if (c.has(a.name)) r.fail("duplicate array '" + a.name + "'");
    c.arrays.push_back(std::move(a));
  }
  if (!r.done()) r.fail("trailing bytes");
  return c;
}

void write_container(const std::string& path, const Container& container) {
  const auto bytes = serialize_container(container);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path);
}

Container read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_container(bytes, path);
}

// ---------------------------------------------------------------------------

namespace {

template <typename Scalar>
Array matrix_array(const std::string& name, const RowMatrix<Scalar>& m) {
  return Array::make(name, {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())}, m.data(),
                     static_cast<std::size_t>(m.size()));
}

template <typename Scalar>
void load_matrix(const Container& c, const std::string& name, RowMatrix<Scalar>& m) {
  const auto& a = c.get(name);
  if (a.dims.size() != 2 || a.dims[0] != m.rows() || a.dims[1] != m.cols())
    throw DataError("array '" + name + "' has the wrong shape");
  if constexpr (std::is_same_v<Scalar, double>) {
    if (a.dtype == DType::f32) {
      const auto v = a.values<float>();
      std::copy(v.begin(), v.end(), m.data());
      return;
    }
  }
  const auto v = a.values<Scalar>();
  std::copy(v.begin(), v.end(), m.data());
}

}  // namespace

template <typename Scalar>
Container model_to_container(EquiSymModel<Scalar>& model) {
  Container c;
  c.text = model.config().to_text();
  for (const auto& p : model.parameters()) c.add(matrix_array("param." + p.name, p.param->value));
  for (const auto& b : model.buffers()) c.add(matrix_array("buffer." + b.name, *b.value));
  return c;
}

template <typename Scalar>
void load_model_state(EquiSymModel<Scalar>& model, const Container& c) {
  std::size_t expected = 0;
  for (const auto& p : model.parameters()) {
    load_matrix(c, "param." + p.name, p.param->value);
    ++expected;
  }
  for (const auto& b : model.buffers()) {
    load_matrix(c, "buffer." + b.name, *b.value);
    ++expected;
  }
  if (expected != c.arrays.size()) throw DataError("checkpoint has arrays the model does not know");
}

template <typename Scalar>
void save_checkpoint(const std::string& path, EquiSymModel<Scalar>& model) {
  write_container(path, model_to_container(model));
}

template <typename Scalar>
std::unique_ptr<EquiSymModel<Scalar>> load_checkpoint(const std::string& path) {
  const Container c = read_container(path);
  auto model = std::make_unique<EquiSymModel<Scalar>>(ModelConfig::from_text(c.text), 0);
  load_model_state(*model, c);
  return model;
}

template Container model_to_container(EquiSymModel<float>&);
template Container model_to_container(EquiSymModel<double>&);
template void load_model_state(EquiSymModel<float>&, const Container&);
template void load_model_state(EquiSymModel<double>&, const Container&);
template void save_checkpoint(const std::string&, EquiSymModel<float>&);
template void save_checkpoint(const std::string&, EquiSymModel<double>&);
template std::unique_ptr<EquiSymModel<float>> load_checkpoint(const std::string&);
template std::unique_ptr<EquiSymModel<double>> load_checkpoint(const std::string&);

// ---------------------------------------------------------------------------

Container labels_to_container(const SampleLabels& l) {
  Container c;
  c.text = "kind=labels\nheight=" + std::to_string(l.height) + "\nwidth=" + std::to_string(l.width) + "\n";
  const std::vector<std::uint32_t> dims{static_cast<std::uint32_t>(l.height), static_cast<std::uint32_t>(l.width)};
  if (l.has_ref()) {
    c.add(Array::make("y_ref", dims, l.y_ref.data(), l.y_ref.size()));
    c.add(Array::make("s_ref", dims, l.s_ref.data(), l.s_ref.size()));
  }
  if (l.has_rot()) {
    c.add(Array::make("y_rot", dims, l.y_rot.data(), l.y_rot.size()));
    c.add(Array::make("s_rot", dims, l.s_rot.data(), l.s_rot.size()));
  }
  return c;
}

namespace {

std::pair<int, int> map_shape(const Container& c) {
  int h = -1, w = -1;
  for (const auto& a : c.arrays) {
    if (a.dims.size() != 2) throw DataError("array '" + a.name + "' is not a 2-d map");
    if (h < 0) {
      h = static_cast<int>(a.dims[0]);
      w = static_cast<int>(a.dims[1]);
    } else if (h != static_cast<int>(a.dims[0]) || w != static_cast<int>(a.dims[1])) {
      throw DataError("maps of different shapes in one container");
    }
  }
  return {std::max(h, 0), std::max(w, 0)};
}

}  // namespace

SampleLabels labels_from_container(const Container& c) {
  SampleLabels l;
  std::tie(l.height, l.width) = map_shape(c);
  if (c.has("y_ref")) {
    l.y_ref = c.get("y_ref").values<std::uint8_t>();
    l.s_ref = c.get("s_ref").values<std::int32_t>();
  }
  if (c.has("y_rot")) {
    l.y_rot = c.get("y_rot").values<std::uint8_t>();
    l.s_rot = c.get("s_rot").values<std::int32_t>();
  }
  return l;
}

Container scores_to_container(const ScoreMaps& s) {
  Container c;
  c.text = "kind=scores\n";
  const std::vector<std::uint32_t> dims{static_cast<std::uint32_t>(s.height), static_cast<std::uint32_t>(s.width)};
  if (!s.ref.empty()) c.add(Array::make("ref", dims, s.ref.data(), s.ref.size()));
  if (!s.rot.empty()) c.add(Array::make("rot", dims, s.rot.data(), s.rot.size()));
  return c;
}

ScoreMaps scores_from_container(const Container& c) {
  ScoreMaps s;
  std::tie(s.height, s.width) = map_shape(c);
  if (c.has("ref")) s.ref = c.get("ref").values<float>();
  if (c.has("rot")) s.rot = c.get("rot").values<float>();
  return s;
}

}  // namespace equisym
