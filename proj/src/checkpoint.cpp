#include "contrailseg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "contrailseg/errors.hpp"

namespace contrailseg {

static_assert(std::endian::native == std::endian::little,
              "tensor container io assumes a little-endian host");

using json = nlohmann::json;

void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors) {
  json header;
  header["tensors"] = json::array();
  int64_t offset = 0;
  for (const NamedTensor& nt : tensors) {
    json e;
    e["name"] = nt.name;
    e["shape"] = nt.tensor.shape;
    e["dtype"] = "f32";
    e["offset"] = offset;
    header["tensors"].push_back(e);
    offset += nt.tensor.numel() * 4;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IntegrityError("cannot open " + path + " for writing");
  std::string line = header.dump();
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.put('\n');
  for (const NamedTensor& nt : tensors) {
    out.write(reinterpret_cast<const char*>(nt.tensor.data.data()),
              static_cast<std::streamsize>(nt.tensor.data.size() * 4));
  }
  if (!out) throw IntegrityError("short write to " + path);
}

std::vector<NamedTensor> load_tensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": missing header line");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(path + ": header is not valid JSON: " + e.what());
  }
  if (!header.contains("tensors") || !header["tensors"].is_array())
    throw FormatError(path + ": header field 'tensors' missing or not an array");

  std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<NamedTensor> out;
  for (size_t idx = 0; idx < header["tensors"].size(); ++idx) {
    const json& e = header["tensors"][idx];
    std::string at = "tensors[" + std::to_string(idx) + "]";
    for (const char* field : {"name", "shape", "dtype", "offset"})
      if (!e.contains(field)) throw FormatError(path + ": missing field " + at + "." + field);
    if (e["dtype"] != "f32")
      throw FormatError(path + ": unsupported dtype at " + at + ".dtype");
    NamedTensor nt;
    nt.name = e["name"].get<std::string>();
    std::vector<int> shape = e["shape"].get<std::vector<int>>();
    int64_t count = shape_numel(shape);
    int64_t offset = e["offset"].get<int64_t>();
    if (offset < 0 || offset + count * 4 > static_cast<int64_t>(payload.size()))
      throw IntegrityError(path + ": payload truncated for tensor '" + nt.name + "' (need " +
                           std::to_string(offset + count * 4) + " bytes, have " +
                           std::to_string(payload.size()) + ")");
    std::vector<float> data(static_cast<size_t>(count));
    std::memcpy(data.data(), payload.data() + offset, static_cast<size_t>(count) * 4);
    nt.tensor = Tensor::from(std::move(shape), std::move(data));
    out.push_back(std::move(nt));
  }
  return out;
}

void save_tensor(const std::string& path, const Tensor& t, const std::string& name) {
  save_tensors(path, {NamedTensor{name, t}});
}

Tensor load_single_tensor(const std::string& path) {
  std::vector<NamedTensor> all = load_tensors(path);
  if (all.size() != 1)
    throw FormatError(path + ": expected exactly one tensor, found " +
                      std::to_string(all.size()));
  return std::move(all[0].tensor);
}

}  // namespace contrailseg
