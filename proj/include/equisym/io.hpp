#pragma once

#include <cstdint>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "equisym/errors.hpp"
#include "equisym/labels.hpp"
#include "equisym/model.hpp"

namespace equisym {

// Binary container layout, all integers little-endian:
//   "EQSY" | u32 version | u32 text length | text | u32 array count |
//   per array: u32 name length | name | u8 dtype | u32 rank | u32 dims[rank] | payload

inline constexpr std::uint32_t kContainerVersion = 1;

enum class DType : std::uint8_t { f32 = 0, f64 = 1, u8 = 2, i32 = 3 };

std::size_t dtype_size(DType dtype);

template <typename T>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::f32; }
template <>
constexpr DType dtype_of<double>() { return DType::f64; }
template <>
constexpr DType dtype_of<std::uint8_t>() { return DType::u8; }
template <>
constexpr DType dtype_of<std::int32_t>() { return DType::i32; }

struct Array {
  std::string name;
  DType dtype = DType::f32;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> bytes;  // little-endian payload

  std::size_t elements() const;

  template <typename T>
  static Array make(std::string name, std::vector<std::uint32_t> dims, const T* data, std::size_t count) {
    Array a{std::move(name), dtype_of<T>(), std::move(dims), {}};
    if (a.elements() != count) throw UsageError("array " + a.name + ": dims do not match the element count");
    a.bytes.resize(count * sizeof(T));
    if (count) std::memcpy(a.bytes.data(), data, a.bytes.size());
    return a;
  }

  template <typename T>
  std::vector<T> values() const {
    if (dtype != dtype_of<T>()) throw DataError("array " + name + ": unexpected dtype");
    std::vector<T> out(elements());
    if (!out.empty()) std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
  }

  friend bool operator==(const Array&, const Array&) = default;
};

struct Container {
  std::string text;  // key=value lines
  std::vector<Array> arrays;

  bool has(const std::string& name) const;
  const Array& get(const std::string& name) const;
  void add(Array array);

  friend bool operator==(const Container&, const Container&) = default;
};

std::vector<std::uint8_t> serialize_container(const Container& container);
Container deserialize_container(const std::vector<std::uint8_t>& bytes, const std::string& source = "<memory>");
void write_container(const std::string& path, const Container& container);
Container read_container(const std::string& path);

/// Config text plus every parameter and buffer, by name.
template <typename Scalar>
Container model_to_container(EquiSymModel<Scalar>& model);
/// Copies matching arrays into the model; any missing or mis-shaped array is a DataError.
template <typename Scalar>
void load_model_state(EquiSymModel<Scalar>& model, const Container& container);

template <typename Scalar>
void save_checkpoint(const std::string& path, EquiSymModel<Scalar>& model);
template <typename Scalar>
std::unique_ptr<EquiSymModel<Scalar>> load_checkpoint(const std::string& path);

Container labels_to_container(const SampleLabels& labels);
SampleLabels labels_from_container(const Container& container);

/// Score maps of one image (empty vector for an absent head).
struct ScoreMaps {
  int height = 0;
  int width = 0;
  std::vector<float> ref;
  std::vector<float> rot;
  friend bool operator==(const ScoreMaps&, const ScoreMaps&) = default;
};

Container scores_to_container(const ScoreMaps& scores);
ScoreMaps scores_from_container(const Container& container);

}  // namespace equisym
