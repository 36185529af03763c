#include <cctype>
#include <fstream>
#include <limits>
#include <string>

#include "edm/dataset.hpp"
#include "edm/error.hpp"

namespace edm {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::size_t number(const char* field) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) throw_error(ErrorKind::format, std::string("PPM header truncated before ") + field);
    if (!std::isdigit(bytes_[pos_]))
      throw_error(ErrorKind::format, std::string("PPM header: expected digits for ") + field);
    std::size_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (v > (1u << 24)) throw_error(ErrorKind::format, std::string("PPM header: ") + field + " too large");
      ++pos_;
    }
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  bool at_end() const { return pos_ >= bytes_.size(); }
  std::uint8_t peek() const { return bytes_[pos_]; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
    throw_error(ErrorKind::format, "not a binary PPM (magic must be P6)");
  HeaderReader r(bytes);
  r.advance(2);
  if (!r.at_end() && !std::isspace(r.peek()) && r.peek() != '#')
    throw_error(ErrorKind::format, "not a binary PPM (magic must be P6)");
  const std::size_t width = r.number("width");
  const std::size_t height = r.number("height");
  const std::size_t maxval = r.number("maxval");
  if (width == 0 || height == 0) throw_error(ErrorKind::format, "PPM with zero width or height");
  if (maxval == 0 || maxval > 65535) throw_error(ErrorKind::format, "PPM maxval out of range");
  if (maxval != 255)
    throw_error(ErrorKind::unsupported, "PPM maxval " + std::to_string(maxval) + " (only 255 is supported)");
  if (r.at_end() || !std::isspace(r.peek()))
    throw_error(ErrorKind::format, "PPM header must end with a single whitespace byte");
  r.advance(1);
  const std::size_t need = width * height * 3;
  if (bytes.size() - r.pos() < need)
    throw_error(ErrorKind::format, "PPM payload truncated: need " + std::to_string(need) +
                                       " bytes, have " + std::to_string(bytes.size() - r.pos()));
  const auto* begin = bytes.data() + r.pos();
  return Image(width, height, std::vector<std::uint8_t>(begin, begin + need));
}

std::vector<std::uint8_t> encode_ppm(const Image& img) {
  const std::string header =
      "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
  const auto bytes = encode_ppm(img);
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw_error(ErrorKind::io, "cannot write " + path.string());
}

}  // namespace edm
