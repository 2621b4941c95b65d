#include "acr/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "acr/errors.hpp"

namespace acr {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return ss.str();
}

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

namespace {

constexpr char kMagic[4] = {'A', 'C', 'R', 'T'};

template <class T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T take(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw FormatError("tensor file truncated");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string encode_tensor(const Tensor& tensor) {
  if (tensor.dims.size() > 0xffff) throw InvalidArgument("too many tensor dimensions");
  if (tensor.values.size() != tensor.element_count()) throw InvalidArgument("tensor payload does not match dims");
  std::string out(kMagic, 4);
  put<std::uint16_t>(out, kTensorVersion);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(tensor.dims.size()));
  for (auto d : tensor.dims) put<std::uint32_t>(out, d);
  const std::size_t header = out.size();
  out.resize(header + tensor.values.size() * sizeof(float));
  std::memcpy(out.data() + header, tensor.values.data(), tensor.values.size() * sizeof(float));
  return out;
}

Tensor decode_tensor(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("not a tensor file (bad magic)");
  std::size_t pos = 4;
  const auto version = take<std::uint16_t>(bytes, pos);
  if (version != kTensorVersion) throw FormatError("unsupported tensor file version " + std::to_string(version));
  const auto ndim = take<std::uint16_t>(bytes, pos);
  Tensor t;
  for (int i = 0; i < ndim; ++i) t.dims.push_back(take<std::uint32_t>(bytes, pos));
  const std::size_t count = t.element_count();
  if (bytes.size() - pos != count * sizeof(float)) throw FormatError("tensor payload length does not match dims");
  t.values.resize(count);
  std::memcpy(t.values.data(), bytes.data() + pos, count * sizeof(float));
  return t;
}

void write_tensor(const fs::path& path, const Tensor& tensor) { write_file_atomic(path, encode_tensor(tensor)); }

Tensor read_tensor(const fs::path& path) { return decode_tensor(read_file(path)); }

Tensor tensor_from_stack(const MapStack& stack) {
  const int h = stack.height(), w = stack.width();
  Tensor t;
  t.dims = {kStackChannels, static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(w)};
  t.values.reserve(t.element_count());
  for (const FeatureMap* m : {&stack.param_map, &stack.center_map, &stack.part_map, &stack.cross_map}) {
    if (m->height != h || m->width != w) throw InvalidArgument("map stack members differ in size");
    for (Eigen::Index i = 0; i < m->data.size(); ++i) t.values.push_back(static_cast<float>(m->data.data()[i]));
  }
  return t;
}

MapStack stack_from_tensor(const Tensor& tensor) {
  if (tensor.dims.size() != 3 || tensor.dims[0] != kStackChannels) {
    throw FormatError("map tensor must have shape 471 x H x W");
  }
  const int h = static_cast<int>(tensor.dims[1]), w = static_cast<int>(tensor.dims[2]);
  MapStack stack = MapStack::zeros(h, w);
  std::size_t pos = 0;
  for (FeatureMap* m : {&stack.param_map, &stack.center_map, &stack.part_map, &stack.cross_map}) {
    for (Eigen::Index i = 0; i < m->data.size(); ++i) m->data.data()[i] = tensor.values[pos++];
  }
  return stack;
}

std::string encode_obj(const Mesh& vertices, const Faces& faces) {
  std::string out;
  char line[128];
  for (Eigen::Index v = 0; v < vertices.rows(); ++v) {
    std::snprintf(line, sizeof line, "v %.9g %.9g %.9g\n", static_cast<double>(static_cast<float>(vertices(v, 0))),
                  static_cast<double>(static_cast<float>(vertices(v, 1))),
                  static_cast<double>(static_cast<float>(vertices(v, 2))));
    out += line;
  }
  for (Eigen::Index f = 0; f < faces.rows(); ++f) {
    std::snprintf(line, sizeof line, "f %d %d %d\n", faces(f, 0) + 1, faces(f, 1) + 1, faces(f, 2) + 1);
    out += line;
  }
  return out;
}

ObjMesh decode_obj(std::string_view text) {
  std::vector<std::array<double, 3>> verts;
  std::vector<std::array<int, 3>> faces;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      std::array<double, 3> v{};
      if (!(ls >> v[0] >> v[1] >> v[2])) throw FormatError("bad vertex on OBJ line " + std::to_string(number));
      verts.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> f{};
      for (int& idx : f) {
        std::string token;
        if (!(ls >> token)) throw FormatError("bad face on OBJ line " + std::to_string(number));
        try {
          idx = std::stoi(token.substr(0, token.find('/'))) - 1;
        } catch (const std::exception&) {
          throw FormatError("bad face index on OBJ line " + std::to_string(number));
        }
      }
      faces.push_back(f);
    }
  }
  ObjMesh mesh{Mesh(static_cast<Eigen::Index>(verts.size()), 3), Faces(static_cast<Eigen::Index>(faces.size()), 3)};
  for (std::size_t i = 0; i < verts.size(); ++i)
    for (int k = 0; k < 3; ++k) mesh.vertices(static_cast<Eigen::Index>(i), k) = verts[i][k];
  for (std::size_t i = 0; i < faces.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const int idx = faces[i][k];
      if (idx < 0 || idx >= static_cast<int>(verts.size())) throw FormatError("OBJ face index out of range");
      mesh.faces(static_cast<Eigen::Index>(i), k) = idx;
    }
  }
  return mesh;
}

std::string encode_pgm(const Eigen::Ref<const Eigen::RowVectorXd>& values, int height, int width) {
  if (values.size() != static_cast<Eigen::Index>(height) * width) throw InvalidArgument("heatmap size mismatch");
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values(i) > 0.0 ? std::min(values(i), 1.0) : 0.0;
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  return out;
}

}  // namespace acr
