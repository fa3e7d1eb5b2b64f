#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ctmdp/error.hpp"

namespace ctmdp::detail {

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace ctmdp::detail
