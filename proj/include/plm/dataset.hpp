#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace plm::dataset {

struct Violation {
    std::size_t line = 0;
    std::string message;
};

const std::vector<std::string>& schema_names();

/// Streams the file and checks every record against the named schema.
/// Returns all violations in line order; an empty result means the file is
/// valid. Throws IoError if the file cannot be read, InvalidInput for an
/// unknown schema.
std::vector<Violation> validate_dataset(const std::string& path, std::string_view schema_name);

} // namespace plm::dataset
