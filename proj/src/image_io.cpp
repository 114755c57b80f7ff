#include "palmline/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>

#include <jpeglib.h>
#include <png.h>

#include "palmline/error.hpp"
#include "palmline/io_util.hpp"

namespace palmline {

namespace {

ImageRgb from_interleaved(const std::vector<std::uint8_t>& rgb, std::size_t w, std::size_t h) {
  ImageRgb out(w, h);
  const std::size_t plane = w * h;
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c) out.pixels[c * plane + i] = rgb[3 * i + c];
  return out;
}

ImageRgb decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    fail(ErrorCode::IoError, std::string("PNG decode: ") + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    fail(ErrorCode::IoError, std::string("PNG decode: ") + image.message);
  }
  return from_interleaved(buffer, image.width, image.height);
}

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

ImageRgb decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo;
  JpegError err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> buffer;
  std::size_t w = 0, h = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(ErrorCode::IoError, std::string("JPEG decode: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  w = cinfo.output_width;
  h = cinfo.output_height;
  buffer.resize(w * h * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = buffer.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return from_interleaved(buffer, w, h);
}

std::vector<std::uint8_t> encode(const std::vector<std::uint8_t>& pixels, std::size_t w, std::size_t h,
                                 std::uint32_t format) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr))
    fail(ErrorCode::IoError, std::string("PNG encode: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr))
    fail(ErrorCode::IoError, std::string("PNG encode: ") + image.message);
  out.resize(size);
  return out;
}

}  // namespace

ImageRgb decode_image(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t png_sig[] = {0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 4 && std::equal(std::begin(png_sig), std::end(png_sig), bytes.begin())) return decode_png(bytes);
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) return decode_jpeg(bytes);
  fail(ErrorCode::IoError, "unsupported image format (PNG or JPEG expected)");
}

ImageRgb read_image(const std::filesystem::path& path) {
  try {
    return decode_image(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const ImageRgb& image) {
  if (image.empty()) fail(ErrorCode::EmptyImage, "cannot encode an empty image");
  const std::size_t plane = image.plane();
  std::vector<std::uint8_t> rgb(plane * 3);
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c)
      rgb[3 * i + c] = static_cast<std::uint8_t>(std::clamp(std::lround(image.pixels[c * plane + i]), 0L, 255L));
  return encode(rgb, image.width, image.height, PNG_FORMAT_RGB);
}

std::vector<std::uint8_t> encode_png(const BinaryMask& mask) {
  if (mask.empty()) fail(ErrorCode::EmptyMask, "cannot encode an empty mask");
  std::vector<std::uint8_t> gray(mask.bits.size());
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = mask.bits[i] ? 255 : 0;
  return encode(gray, mask.width, mask.height, PNG_FORMAT_GRAY);
}

}  // namespace palmline
