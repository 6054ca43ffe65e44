#pragma once

#include <filesystem>
#include <string>

#include "gazefusion/core_types.hpp"

namespace gf {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);
uint64_t file_digest(const std::filesystem::path& path);

// 8-bit binary PPM/PGM. Values are mapped to k/255 on read; writes round.
ImagePlane read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const ImagePlane& img);

// Minimal NPY v1.0, C-order, dtypes <f8/<f4/|u1 on read, <f8 on write.
// Serves as the self-describing portable array format for heatmaps and
// depth planes.
Tensor read_npy(const std::filesystem::path& path);
void write_npy(const std::filesystem::path& path, const Tensor& t);

}  // namespace gf
