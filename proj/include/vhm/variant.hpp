#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace vhm {

/// Image variant fed to the responder: unaltered, noise-reduced, edge-enhanced.
enum class Variant { Org, Nr, Ee };

/// Processing order, which is also the tie-break preference (least processing first).
inline constexpr std::array<Variant, 3> kAllVariants{Variant::Org, Variant::Nr, Variant::Ee};

std::string_view to_string(Variant v) noexcept;
std::optional<Variant> parse_variant(std::string_view s) noexcept;

}  // namespace vhm
