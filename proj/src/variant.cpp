#include "vhm/variant.hpp"

#include <algorithm>
#include <cctype>

namespace vhm {

std::string_view to_string(Variant v) noexcept {
    switch (v) {
        case Variant::Org: return "ORG";
        case Variant::Nr: return "NR";
        case Variant::Ee: return "EE";
    }
    return "?";
}

std::optional<Variant> parse_variant(std::string_view s) noexcept {
    std::string up(s);
    std::transform(up.begin(), up.end(), up.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (Variant v : kAllVariants)
        if (up == to_string(v)) return v;
    return std::nullopt;
}

}  // namespace vhm
