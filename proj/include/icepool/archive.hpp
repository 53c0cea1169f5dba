#pragma once

// Parameter archive: <stem>.json manifest (names, shapes, byte offsets)
// plus <stem>.bin holding row-major little-endian float64 values.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "pipeline.hpp"

namespace icepool {

struct NamedTensor {
  std::string name;
  Matrix value;
};

namespace detail {

inline std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

}  // namespace detail

inline void save_tensors(const std::filesystem::path& stem, const std::vector<NamedTensor>& tensors,
                         const nlohmann::json& metadata = nlohmann::json::object()) {
  static_assert(std::endian::native == std::endian::little, "archive writer assumes a little-endian host");
  nlohmann::json manifest;
  manifest["format"] = "icepool-tensors";
  manifest["version"] = 1;
  manifest["dtype"] = "float64";
  manifest["byte_order"] = "little";
  manifest["layout"] = "row-major";
  manifest["metadata"] = metadata;
  manifest["tensors"] = nlohmann::json::array();
  std::ofstream bin(detail::with_suffix(stem, ".bin"), std::ios::binary);
  if (!bin) throw IngestionError("cannot write " + detail::with_suffix(stem, ".bin").string());
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    manifest["tensors"].push_back({{"name", t.name}, {"shape", {t.value.rows(), t.value.cols()}}, {"offset", offset}});
    for (Eigen::Index r = 0; r < t.value.rows(); ++r)
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
        const double v = t.value(r, c);
        bin.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
    offset += static_cast<std::uint64_t>(t.value.size()) * sizeof(double);
  }
  std::ofstream(detail::with_suffix(stem, ".json")) << manifest.dump(2) << '\n';
}

struct TensorArchive {
  nlohmann::json metadata;
  std::vector<NamedTensor> tensors;

  const Matrix& at(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return t.value;
    throw FormatError("archive", 0, "missing tensor '" + name + "'");
  }
  bool contains(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return true;
    return false;
  }
};

inline TensorArchive load_tensors(const std::filesystem::path& stem) {
  const auto json_path = detail::with_suffix(stem, ".json");
  const auto bin_path = detail::with_suffix(stem, ".bin");
  std::ifstream js(json_path);
  if (!js) throw IngestionError("missing archive manifest " + json_path.string());
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IngestionError("missing archive payload " + bin_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(json_path.filename().string(), 0, e.what());
  }
  if (manifest.value("format", "") != "icepool-tensors" || manifest.value("dtype", "") != "float64")
    throw FormatError(json_path.filename().string(), 0, "not an icepool float64 tensor archive");
  const std::vector<char> payload((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  TensorArchive out;
  out.metadata = manifest.value("metadata", nlohmann::json::object());
  for (const auto& entry : manifest.at("tensors")) {
    const auto rows = entry.at("shape").at(0).get<Eigen::Index>();
    const auto cols = entry.at("shape").at(1).get<Eigen::Index>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    const auto bytes = static_cast<std::uint64_t>(rows * cols) * sizeof(double);
    if (rows < 0 || cols < 0 || offset + bytes > payload.size())
      throw FormatError(bin_path.filename().string(), 0, "tensor '" + entry.at("name").get<std::string>() + "' overruns payload");
    Matrix m(rows, cols);
    const char* src = payload.data() + offset;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c, src += sizeof(double)) std::memcpy(&m(r, c), src, sizeof(double));
    out.tensors.push_back({entry.at("name").get<std::string>(), std::move(m)});
  }
  return out;
}

inline void save_params(const std::filesystem::path& stem, const IceParams& p) {
  std::vector<NamedTensor> tensors{{"classifier.w", p.classifier}, {"classifier.b", p.bias}};
  nlohmann::json meta{{"has_attention", p.cegat.has_value()}};
  if (p.cegat) {
    tensors.push_back({"cegat.w", p.cegat->w});
    tensors.push_back({"cegat.a", p.cegat->a});
    tensors.push_back({"cegat.w_e", p.cegat->w_e});
    meta["variant"] = std::string(to_string(p.cegat->variant));
    meta["leaky_slope"] = p.cegat->leaky_slope;
  }
  save_tensors(stem, tensors, meta);
}

inline IceParams load_params(const std::filesystem::path& stem) {
  const auto ar = load_tensors(stem);
  IceParams p;
  p.classifier = ar.at("classifier.w");
  p.bias = ar.at("classifier.b").col(0);
  if (ar.metadata.value("has_attention", false)) {
    CegatParams c;
    c.variant = parse_attention_variant(ar.metadata.at("variant").get<std::string>());
    c.leaky_slope = ar.metadata.at("leaky_slope").get<double>();
    c.w = ar.at("cegat.w");
    c.a = ar.at("cegat.a").col(0);
    c.w_e = ar.at("cegat.w_e");
    p.cegat = std::move(c);
  }
  return p;
}

}  // namespace icepool
