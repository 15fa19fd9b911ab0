#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace rae {

// Standard CRC-32 (reflected, polynomial 0xEDB88320, init/final 0xFFFFFFFF).
std::uint32_t crc32(const std::uint8_t* data, std::size_t len);
std::uint32_t crc32(const std::vector<std::uint8_t>& data);

}  // namespace rae
