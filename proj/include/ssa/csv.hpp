#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace ssa::csv {

// Minimal comma-separated reader. Fields never contain commas or quotes in
// the formats this project reads and writes.
std::vector<std::string> split(std::string_view line);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based source line of each row
};

Table read(std::istream& in);
Table read_file(const std::filesystem::path& path);

std::ifstream open_in(const std::filesystem::path& path);
std::ofstream open_out(const std::filesystem::path& path);

// Writes the whole string atomically enough for our purposes: open, write,
// check stream state.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace ssa::csv
