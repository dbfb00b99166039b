#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace figbias {

// ASCII lowercasing; bytes >= 0x80 pass through unchanged, so UTF-8 stays valid.
std::string fold_case(std::string_view s);

// Unicode NFC normalization. Invalid UTF-8 is returned unchanged.
std::string nfc(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep = " ");

std::string trim(std::string_view s);

}  // namespace figbias
