#include "leap/crypto/types.hpp"

#include <algorithm>

#include "leap/errors.hpp"
#include "leap/hex.hpp"

namespace leap::crypto {

SymmetricKey128 SymmetricKey128::from_span(std::span<const std::uint8_t> data) {
    if (data.size() != 16)
        throw KeyLengthError("expected a 16-byte key, got " + std::to_string(data.size()) + " bytes");
    SymmetricKey128 key;
    std::copy(data.begin(), data.end(), key.bytes.begin());
    return key;
}

SymmetricKey128 SymmetricKey128::from_hex(std::string_view hex) {
    return from_span(leap::from_hex(hex));
}

std::string SymmetricKey128::to_hex() const { return leap::to_hex(bytes); }

}  // namespace leap::crypto
