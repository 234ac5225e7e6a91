#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

namespace mlsh {

enum class InputFormat { Fvecs, Csv };

std::string_view to_string(InputFormat format);
InputFormat input_format_from_string(std::string_view name);

// fvecs: records of [int32 LE d][d × float32 LE]. csv: one vector per line,
// comma-separated decimals. All vectors must share one dimension; errors name
// the byte offset (fvecs) or line number (csv) where the problem starts.
std::vector<std::vector<double>> ingest(const std::filesystem::path& path, InputFormat format);

void write_fvecs(const std::filesystem::path& path, const std::vector<std::vector<double>>& vectors);
void write_csv(const std::filesystem::path& path, const std::vector<std::vector<double>>& vectors);

}  // namespace mlsh
