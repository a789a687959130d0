#pragma once

#include <filesystem>
#include <string>
#include <utility>

namespace acceptance {

/// Drives a live in-process HTTP service; returns (pass, detail).
std::pair<bool, std::string> service_contract(const std::filesystem::path& dir);

}  // namespace acceptance
