#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace plm::templates {

namespace detail {
const std::map<std::string, std::string, std::less<>>& table();
}

// Raw template text by id (the resource file name without extension).
// Throws InvalidInput for unknown ids.
std::string_view get(std::string_view id);

std::vector<std::string> ids();

/// Substitutes every `{{name}}` placeholder. A placeholder without a value
/// raises InvalidInput naming it; unused values are ignored.
std::string fill(std::string_view tpl, const std::map<std::string, std::string, std::less<>>& values);

} // namespace plm::templates
