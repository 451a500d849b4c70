#include "vhm/codec.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "vhm/errors.hpp"

namespace vhm::codec {

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

bool is_png(std::span<const std::uint8_t> b) {
    return b.size() >= 8 && std::memcmp(b.data(), kPngSignature, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> b) {
    return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

ImageBuffer decode_png(std::span<const std::uint8_t> encoded) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, encoded.data(), encoded.size()))
        throw InvalidArgument(std::string("PNG decode failed: ") + img.message);
    img.format = PNG_FORMAT_RGB;
    if (img.width < 1 || img.height < 1) {
        png_image_free(&img);
        throw InvalidArgument("PNG has zero dimensions");
    }
    std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(img));
    // Composite onto black if the source carries alpha; no alpha survives decoding.
    png_color background{0, 0, 0};
    if (!png_image_finish_read(&img, &background, pixels.data(), 0, nullptr)) {
        std::string msg = img.message;
        png_image_free(&img);
        throw InvalidArgument("PNG decode failed: " + msg);
    }
    return ImageBuffer(static_cast<int>(img.width), static_cast<int>(img.height), std::move(pixels));
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

ImageBuffer decode_jpeg(std::span<const std::uint8_t> encoded) {
    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    std::vector<std::uint8_t> pixels;
    int width = 0;
    int height = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw InvalidArgument(std::string("JPEG decode failed: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, encoded.data(), static_cast<unsigned long>(encoded.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    width = static_cast<int>(cinfo.output_width);
    height = static_cast<int>(cinfo.output_height);
    pixels.resize(static_cast<std::size_t>(width) * height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return ImageBuffer(width, height, std::move(pixels));
}

}  // namespace

ImageBuffer decode(std::span<const std::uint8_t> encoded) {
    if (is_png(encoded)) return decode_png(encoded);
    if (is_jpeg(encoded)) return decode_jpeg(encoded);
    throw InvalidArgument("unsupported image format (expected PNG or JPEG)");
}

Bytes encode_png(const ImageBuffer& image) {
    if (image.empty()) throw InvalidArgument("encode_png: empty image");
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width());
    img.height = static_cast<png_uint_32>(image.height());
    img.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_get_memory_size(img, size, 0, image.data().data(), 0, nullptr))
        throw IoError(std::string("PNG encode failed: ") + img.message);
    Bytes out(size);
    if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.data().data(), 0, nullptr))
        throw IoError(std::string("PNG encode failed: ") + img.message);
    out.resize(size);
    return out;
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

ImageBuffer read_image(const std::filesystem::path& path) { return decode(read_file(path)); }

void write_png(const std::filesystem::path& path, const ImageBuffer& image) {
    Bytes bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

}  // namespace vhm::codec
