#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include "edm/dataset.hpp"
#include "edm/error.hpp"

#ifdef EDM_HAVE_PNG
#include <png.h>
#endif
#ifdef EDM_HAVE_JPEG
#include <jpeglib.h>
#endif

namespace edm {

namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw_error(ErrorKind::data, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (f.bad()) throw_error(ErrorKind::data, "cannot read " + path.string());
  return bytes;
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
#ifdef EDM_HAVE_PNG
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw_error(ErrorKind::data, std::string("png: ") + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, px.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw_error(ErrorKind::data, "png: " + msg);
  }
  return Image(image.width, image.height, std::move(px));
#else
  (void)bytes;
  throw_error(ErrorKind::data, "png support not compiled in");
#endif
}

#ifdef EDM_HAVE_JPEG
struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}
#endif

Image decode_jpeg(const std::vector<std::uint8_t>& bytes) {
#ifdef EDM_HAVE_JPEG
  jpeg_decompress_struct cinfo{};
  JpegError err{};
  std::vector<std::uint8_t> px;
  std::size_t width = 0, height = 0;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw_error(ErrorKind::data, std::string("jpeg: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = cinfo.output_width;
  height = cinfo.output_height;
  px.resize(width * height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = px.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return Image(width, height, std::move(px));
#else
  (void)bytes;
  throw_error(ErrorKind::data, "jpeg support not compiled in");
#endif
}

}  // namespace

bool has_image_extension(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  return ext == ".ppm" || ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

Image decode_image(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  if (!has_image_extension(path))
    throw_error(ErrorKind::data, path.string() + ": unknown image extension '" + ext + "'");
  const auto bytes = read_file(path);
  try {
    if (ext == ".ppm") return decode_ppm(bytes);
    if (ext == ".png") return decode_png(bytes);
    return decode_jpeg(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

}  // namespace edm
