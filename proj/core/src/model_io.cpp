#include "edm/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "edm/error.hpp"

namespace edm {

namespace {

constexpr std::uint8_t kMagic[4] = {'3', 'D', 'E', 'M'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFu) throw_error(ErrorKind::data, std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }

  void require(std::size_t n, const std::string& what) const {
    if (remaining() < n)
      throw_error(ErrorKind::corruption, "file truncated reading " + what + " (need " + std::to_string(n) +
                                             " bytes, " + std::to_string(remaining()) + " left)");
  }

  std::uint32_t u32(const std::string& what) {
    require(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string_view text(std::size_t n, const std::string& what) {
    require(n, what);
    std::string_view s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::span<const std::uint8_t> raw(std::size_t n, const std::string& what) {
    require(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<Shape> expected_shapes(const ModelConfig& c) {
  std::vector<Shape> shapes;
  std::size_t cin = 3;
  for (auto cout : c.channels) {
    shapes.push_back({cout, cin, kKernel, kKernel});
    shapes.push_back({cout});
    cin = cout;
  }
  shapes.push_back({c.num_classes(), c.head_inputs()});
  shapes.push_back({c.num_classes()});
  return shapes;
}

}  // namespace

std::string model_header_json(const ModelConfig& config) {
  nlohmann::json j;
  j["task"] = std::string(task_name(config.task));
  j["input_size"] = config.input_size;
  j["depth"] = config.depth;
  j["channels"] = config.channels;
  j["pool_after"] = config.pool_after;
  j["class_names"] = config.class_names;
  // nlohmann objects keep keys sorted; dump() without indent is compact.
  return j.dump();
}

ModelConfig parse_model_header(std::string_view json) {
  ModelConfig c;
  try {
    const auto j = nlohmann::json::parse(json);
    c.task = parse_task(j.at("task").get<std::string>());
    c.input_size = j.at("input_size").get<std::size_t>();
    c.depth = j.at("depth").get<std::size_t>();
    c.channels = j.at("channels").get<std::vector<std::size_t>>();
    c.pool_after = j.at("pool_after").get<std::vector<bool>>();
    c.class_names = j.at("class_names").get<std::vector<std::string>>();
    c.validate();
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorKind::corruption, std::string("model header: ") + e.what());
  } catch (const Error& e) {
    throw_error(ErrorKind::corruption, "model header: " + e.detail());
  }
  return c;
}

std::vector<std::uint8_t> serialize_model(const Model& model) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kModelFileVersion);
  const std::string header = model_header_json(model.config());
  put_u32(out, checked_u32(header.size(), "header"));
  out.insert(out.end(), header.begin(), header.end());

  const auto names = parameter_names(model.config().depth);
  const auto params = model.parameters();
  put_u32(out, checked_u32(params.size(), "tensor count"));
  for (std::size_t i = 0; i < params.size(); ++i) {
    put_u32(out, checked_u32(names[i].size(), "tensor name"));
    out.insert(out.end(), names[i].begin(), names[i].end());
    const auto& t = *params[i];
    put_u32(out, checked_u32(t.rank(), "rank"));
    for (auto d : t.dims()) put_u32(out, checked_u32(d, "dimension"));
    for (float v : t.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Model deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw_error(ErrorKind::format, "not a model file (magic must be 3DEM)");
  Reader r(bytes.subspan(4));
  const std::uint32_t version = r.u32("version");
  if (version != kModelFileVersion)
    throw_error(ErrorKind::unsupported, "model file version " + std::to_string(version) +
                                            " (this build reads version 1)");
  const std::uint32_t header_len = r.u32("header length");
  const ModelConfig config = parse_model_header(r.text(header_len, "header"));

  const auto names = parameter_names(config.depth);
  const auto shapes = expected_shapes(config);
  const std::uint32_t count = r.u32("tensor count");
  if (count < names.size())
    throw_error(ErrorKind::corruption, "missing tensor " + names[count] + " (file declares " +
                                           std::to_string(count) + " tensors, depth " +
                                           std::to_string(config.depth) + " needs " +
                                           std::to_string(names.size()) + ")");
  if (count > names.size())
    throw_error(ErrorKind::corruption, "file declares " + std::to_string(count) + " tensors, expected " +
                                           std::to_string(names.size()));

  std::vector<Tensor> tensors;
  tensors.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string& name = names[i];
    if (r.remaining() == 0) throw_error(ErrorKind::corruption, "missing tensor " + name);
    const std::uint32_t name_len = r.u32("name length of " + name);
    const auto found = r.text(name_len, "name of " + name);
    if (found != name)
      throw_error(ErrorKind::corruption, "expected tensor " + name + ", found '" + std::string(found) + "'");
    const std::uint32_t ndim = r.u32("rank of " + name);
    if (ndim != shapes[i].size())
      throw_error(ErrorKind::corruption, "tensor " + name + " has rank " + std::to_string(ndim) +
                                             ", expected " + std::to_string(shapes[i].size()));
    Shape dims(ndim);
    for (auto& d : dims) d = r.u32("dims of " + name);
    if (dims != shapes[i])
      throw_error(ErrorKind::corruption, "tensor " + name + " has shape " + shape_string(dims) +
                                             ", expected " + shape_string(shapes[i]));
    const std::size_t n = shape_size(dims);
    const auto payload = r.raw(n * 4, "payload of " + name);
    std::vector<float> values(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(payload[k * 4 + b]) << (8 * b);
      values[k] = std::bit_cast<float>(bits);
    }
    tensors.emplace_back(std::move(dims), std::move(values));
  }
  if (r.remaining() != 0)
    throw_error(ErrorKind::corruption, std::to_string(r.remaining()) + " trailing bytes after last tensor");

  std::vector<ConvLayer> convs;
  for (std::size_t i = 0; i < config.depth; ++i)
    convs.push_back({std::move(tensors[2 * i]), std::move(tensors[2 * i + 1])});
  FcLayer head{std::move(tensors[2 * config.depth]), std::move(tensors[2 * config.depth + 1])};
  return Model(config, std::move(convs), std::move(head));
}

std::size_t save_model(const Model& model, std::ostream& sink) {
  const auto bytes = serialize_model(model);
  sink.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!sink) throw_error(ErrorKind::io, "failed writing model");
  return bytes.size();
}

std::size_t save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw_error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  const auto n = save_model(model, f);
  f.close();
  if (!f) throw_error(ErrorKind::io, "failed writing " + path.string());
  return n;
}

Model load_model(std::istream& source) {
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(source)), std::istreambuf_iterator<char>());
  if (source.bad()) throw_error(ErrorKind::io, "failed reading model");
  return deserialize_model(bytes);
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw_error(ErrorKind::io, "cannot open model " + path.string());
  try {
    return load_model(f);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

}  // namespace edm
