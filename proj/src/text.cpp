#include "qlfr/text.hpp"

#include <openssl/evp.h>

#include <array>
#include <cctype>
#include <stdexcept>

namespace qlfr::text {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool ends_sentence(std::string_view s) {
    if (s.empty()) return false;
    char c = s.back();
    return c == '.' || c == '!' || c == '?';
}

}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string casefold(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        auto u = static_cast<unsigned char>(c);
        if (u < 0x80) c = static_cast<char>(std::tolower(u));
    }
    return out;
}

std::string normalize_label(std::string_view s) {
    return casefold(trim(s));
}

std::string join_with(std::string_view left, std::string_view sep, std::string_view right) {
    std::string out(left);
    if (left.empty()) {
        out.append(right);
        return out;
    }
    std::string_view effective = sep;
    if (ends_sentence(left)) {
        while (!effective.empty() && (effective.front() == '.' || effective.front() == ',')) {
            effective.remove_prefix(1);
        }
        if (effective.empty()) effective = " ";
    }
    out.append(effective);
    out.append(right);
    return out;
}

std::string join_context(std::string_view left, std::string_view right) {
    return join_with(left, ". ", right);
}

std::string join_context(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) out = join_context(out, p);
    return out;
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

}  // namespace qlfr::text

#include <chrono>
#include <ctime>

namespace qlfr::text {

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace qlfr::text
