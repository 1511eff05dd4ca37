#pragma once

#include <filesystem>
#include <vector>

#include "posegan/tensor.hpp"

namespace posegan {

// Images are [3,H,W] tensors with values in [-1, 1]. Files are 8-bit RGB PNG;
// writing quantizes with round-to-nearest, so a written image reloads to
// within 1/127 of the original.
nn::Tensor load_png_image(const std::filesystem::path& path);
void save_png_image(const std::filesystem::path& path, const nn::Tensor& img);

// Stacks K images of identical shape into a [K,3,H,W] batch.
nn::Tensor stack_images(const std::vector<nn::Tensor>& images);
// Row n of a [N,3,H,W] batch as a [3,H,W] image.
nn::Tensor batch_row(const nn::Tensor& batch, int n);

// Tiles rows x cols images (all same shape) into one image with a 2 px gutter.
nn::Tensor compose_grid(const std::vector<std::vector<nn::Tensor>>& rows);

} // namespace posegan
