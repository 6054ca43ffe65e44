#include "gazefusion/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gf {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  GF_CHECK(f.good(), "cannot open file for reading: %s", path.string().c_str());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  GF_CHECK(f.good(), "cannot open file for writing: %s", path.string().c_str());
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  GF_CHECK(f.good(), "write failed: %s", path.string().c_str());
}

uint64_t file_digest(const fs::path& path) {
  const std::string bytes = read_file(path);
  return fnv1a(bytes.data(), bytes.size());
}

static void skip_ppm_whitespace(std::istringstream& is) {
  while (true) {
    int c = is.peek();
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      break;
    }
  }
}

ImagePlane read_ppm(const fs::path& path) {
  const std::string bytes = read_file(path);
  std::istringstream is(bytes);
  std::string magic;
  is >> magic;
  GF_CHECK(magic == "P6" || magic == "P5", "%s: unsupported image magic '%s' (need P6/P5)",
           path.string().c_str(), magic.c_str());
  const int channels = magic == "P6" ? 3 : 1;
  int w = 0, h = 0, maxval = 0;
  skip_ppm_whitespace(is);
  is >> w;
  skip_ppm_whitespace(is);
  is >> h;
  skip_ppm_whitespace(is);
  is >> maxval;
  GF_CHECK(w > 0 && h > 0 && maxval == 255, "%s: bad image header", path.string().c_str());
  is.get();  // single whitespace after maxval
  const size_t need = static_cast<size_t>(w) * h * channels;
  const size_t off = static_cast<size_t>(is.tellg());
  GF_CHECK(bytes.size() - off >= need, "%s: truncated pixel data", path.string().c_str());

  ImagePlane img(channels, h, w);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data()) + off;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(c, y, x) = static_cast<double>(p[(static_cast<size_t>(y) * w + x) * channels + c]) / 255.0;
  return img;
}

void write_ppm(const fs::path& path, const ImagePlane& img) {
  const int C = img.channels(), H = img.height(), W = img.width();
  GF_CHECK(C == 3 || C == 1, "write_ppm: need 1 or 3 channels, got %d", C);
  std::string out = strf("%s\n%d %d\n255\n", C == 3 ? "P6" : "P5", W, H);
  out.reserve(out.size() + static_cast<size_t>(C) * H * W);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < C; ++c) {
        const int q = static_cast<int>(std::lround(std::clamp(img.at(c, y, x), 0.0, 1.0) * 255.0));
        out.push_back(static_cast<char>(q));
      }
  write_file(path, out);
}

void write_npy(const fs::path& path, const Tensor& t) {
  std::string shape_str = "(";
  for (size_t i = 0; i < t.shape.size(); ++i) {
    shape_str += std::to_string(t.shape[i]);
    if (i + 1 < t.shape.size() || t.shape.size() == 1) shape_str += ",";
    if (i + 1 < t.shape.size()) shape_str += " ";
  }
  shape_str += ")";
  std::string header =
      strf("{'descr': '<f8', 'fortran_order': False, 'shape': %s, }", shape_str.c_str());
  // pad so that total header area is a multiple of 64
  const size_t base = 10 + header.size() + 1;
  const size_t padded = (base + 63) / 64 * 64;
  header.append(padded - base, ' ');
  header.push_back('\n');

  std::string out = "\x93NUMPY";
  out.push_back('\x01');
  out.push_back('\x00');
  const uint16_t hlen = static_cast<uint16_t>(header.size());
  out.push_back(static_cast<char>(hlen & 0xff));
  out.push_back(static_cast<char>(hlen >> 8));
  out += header;
  const size_t nbytes = static_cast<size_t>(t.numel()) * sizeof(double);
  const size_t off = out.size();
  out.resize(off + nbytes);
  std::memcpy(out.data() + off, t.v.data(), nbytes);
  write_file(path, out);
}

Tensor read_npy(const fs::path& path) {
  const std::string bytes = read_file(path);
  GF_CHECK(bytes.size() > 10 && bytes.compare(0, 6, "\x93NUMPY") == 0,
           "%s: not an NPY file", path.string().c_str());
  const uint8_t major = static_cast<uint8_t>(bytes[6]);
  GF_CHECK(major == 1, "%s: unsupported NPY version %d", path.string().c_str(), major);
  const uint16_t hlen = static_cast<uint16_t>(static_cast<unsigned char>(bytes[8])) |
                        (static_cast<uint16_t>(static_cast<unsigned char>(bytes[9])) << 8);
  const std::string header = bytes.substr(10, hlen);

  auto find_value = [&header, &path](const std::string& key) {
    const size_t kpos = header.find("'" + key + "'");
    GF_CHECK(kpos != std::string::npos, "%s: NPY header missing key %s",
             path.string().c_str(), key.c_str());
    size_t colon = header.find(':', kpos);
    return header.substr(colon + 1);
  };

  const std::string descr_part = find_value("descr");
  std::string dtype;
  {
    const size_t q0 = descr_part.find('\'');
    const size_t q1 = descr_part.find('\'', q0 + 1);
    dtype = descr_part.substr(q0 + 1, q1 - q0 - 1);
  }
  GF_CHECK(dtype == "<f8" || dtype == "<f4" || dtype == "|u1",
           "%s: unsupported NPY dtype %s", path.string().c_str(), dtype.c_str());
  GF_CHECK(find_value("fortran_order").find("False") != std::string::npos,
           "%s: fortran-order NPY not supported", path.string().c_str());

  std::vector<int> shape;
  {
    const std::string sh = find_value("shape");
    const size_t p0 = sh.find('(');
    const size_t p1 = sh.find(')');
    std::string inner = sh.substr(p0 + 1, p1 - p0 - 1);
    std::istringstream is(inner);
    std::string tok;
    while (std::getline(is, tok, ',')) {
      size_t a = tok.find_first_not_of(" \t");
      if (a == std::string::npos) continue;
      shape.push_back(std::stoi(tok.substr(a)));
    }
  }
  if (shape.empty()) shape.push_back(1);

  Tensor t(shape);
  const size_t off = 10 + hlen;
  const char* p = bytes.data() + off;
  const size_t n = static_cast<size_t>(t.numel());
  if (dtype == "<f8") {
    GF_CHECK(bytes.size() - off >= n * 8, "%s: truncated NPY payload", path.string().c_str());
    std::memcpy(t.v.data(), p, n * 8);
  } else if (dtype == "<f4") {
    GF_CHECK(bytes.size() - off >= n * 4, "%s: truncated NPY payload", path.string().c_str());
    for (size_t i = 0; i < n; ++i) {
      float f;
      std::memcpy(&f, p + i * 4, 4);
      t.v[i] = static_cast<double>(f);
    }
  } else {
    GF_CHECK(bytes.size() - off >= n, "%s: truncated NPY payload", path.string().c_str());
    for (size_t i = 0; i < n; ++i)
      t.v[i] = static_cast<double>(static_cast<unsigned char>(p[i])) / 255.0;
  }
  return t;
}

}  // namespace gf
