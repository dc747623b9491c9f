#include "plm/templates.hpp"

#include "plm/error.hpp"

namespace plm::templates {

std::string_view get(std::string_view id)
{
    const auto& t = detail::table();
    auto it = t.find(id);
    if (it == t.end())
        throw InvalidInput("unknown template '" + std::string(id) + "'");
    return it->second;
}

std::vector<std::string> ids()
{
    std::vector<std::string> out;
    for (const auto& [k, v] : detail::table())
        out.push_back(k);
    return out;
}

std::string fill(std::string_view tpl, const std::map<std::string, std::string, std::less<>>& values)
{
    std::string out;
    out.reserve(tpl.size());
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        const auto open = tpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tpl.substr(pos));
            break;
        }
        const auto close = tpl.find("}}", open + 2);
        if (close == std::string_view::npos) {
            out.append(tpl.substr(pos));
            break;
        }
        out.append(tpl.substr(pos, open - pos));
        const auto name = tpl.substr(open + 2, close - open - 2);
        auto it = values.find(name);
        if (it == values.end())
            throw InvalidInput("missing value for placeholder '" + std::string(name) + "'");
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

} // namespace plm::templates
