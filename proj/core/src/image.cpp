#include "posegan/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

namespace posegan {

using nn::Tensor;

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

Tensor load_png_image(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw IoError("cannot open image file: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng: failed to create read struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng: failed to create info struct");
    }
    std::vector<png_bytep> row_ptrs;
    std::vector<png_byte> pixels;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("failed to decode PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const png_byte color_type = png_get_color_type(png, info);
    const png_byte bit_depth = png_get_bit_depth(png, info);

    // Normalize everything to 8-bit RGB.
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    pixels.resize(static_cast<std::size_t>(w) * h * 3);
    row_ptrs.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = pixels.data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(png, row_ptrs.data());
    png_destroy_read_struct(&png, &info, nullptr);

    Tensor img({3, static_cast<int>(h), static_cast<int>(w)});
    for (png_uint_32 y = 0; y < h; ++y)
        for (png_uint_32 x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = pixels[(static_cast<std::size_t>(y) * w + x) * 3 + static_cast<std::size_t>(c)] / 255.0;
                img[(static_cast<long>(c) * h + y) * w + x] = 2.0 * v - 1.0;
            }
    return img;
}

void save_png_image(const std::filesystem::path& path, const Tensor& img) {
    if (img.ndim() != 3 || img.dim(0) != 3) throw ShapeError("save_png_image: expected [3,H,W], got " + nn::shape_str(img.shape()));
    const int h = img.dim(1), w = img.dim(2);

    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw IoError("cannot write image file: " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng: failed to create write struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng: failed to create info struct");
    }
    std::vector<png_byte> pixels(static_cast<std::size_t>(w) * h * 3);
    std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(h));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = (img[(static_cast<long>(c) * h + y) * w + x] + 1.0) * 0.5;
                v = std::min(1.0, std::max(0.0, v));
                pixels[(static_cast<std::size_t>(y) * w + x) * 3 + static_cast<std::size_t>(c)] =
                    static_cast<png_byte>(std::lround(v * 255.0));
            }
    for (int y = 0; y < h; ++y) row_ptrs[static_cast<std::size_t>(y)] = pixels.data() + static_cast<std::size_t>(y) * w * 3;
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Tensor stack_images(const std::vector<Tensor>& images) {
    if (images.empty()) throw ShapeError("stack_images: empty list");
    const auto& s = images.front().shape();
    Tensor out({static_cast<int>(images.size()), s[0], s[1], s[2]});
    const long sz = images.front().numel();
    for (std::size_t i = 0; i < images.size(); ++i) {
        require_same_shape(images[i], images.front(), "stack_images");
        std::copy(images[i].data(), images[i].data() + sz, out.data() + static_cast<long>(i) * sz);
    }
    return out;
}

Tensor batch_row(const Tensor& batch, int n) {
    if (batch.ndim() != 4) throw ShapeError("batch_row: expected [N,C,H,W]");
    if (n < 0 || n >= batch.dim(0)) throw IndexError("batch_row: index out of range");
    Tensor out({batch.dim(1), batch.dim(2), batch.dim(3)});
    const long sz = out.numel();
    std::copy(batch.data() + static_cast<long>(n) * sz, batch.data() + static_cast<long>(n + 1) * sz, out.data());
    return out;
}

Tensor compose_grid(const std::vector<std::vector<Tensor>>& rows) {
    if (rows.empty() || rows.front().empty()) throw ShapeError("compose_grid: empty grid");
    const int h = rows.front().front().dim(1);
    const int w = rows.front().front().dim(2);
    const int nrows = static_cast<int>(rows.size());
    const int ncols = static_cast<int>(rows.front().size());
    const int gutter = 2;
    const int gh = nrows * h + (nrows + 1) * gutter;
    const int gw = ncols * w + (ncols + 1) * gutter;
    Tensor grid({3, gh, gw}, -1.0);
    for (int r = 0; r < nrows; ++r) {
        if (static_cast<int>(rows[static_cast<std::size_t>(r)].size()) != ncols)
            throw ShapeError("compose_grid: ragged rows");
        for (int cidx = 0; cidx < ncols; ++cidx) {
            const Tensor& cell = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(cidx)];
            require_same_shape(cell, rows.front().front(), "compose_grid");
            const int oy = gutter + r * (h + gutter);
            const int ox = gutter + cidx * (w + gutter);
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x)
                        grid[(static_cast<long>(c) * gh + oy + y) * gw + ox + x] =
                            cell[(static_cast<long>(c) * h + y) * w + x];
        }
    }
    return grid;
}

} // namespace posegan
