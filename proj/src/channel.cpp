#include "leap/channel.hpp"

#include "leap/errors.hpp"

namespace leap {

void SecureChannel::require_role(Role expected) const {
    if (role_ != expected)
        throw Error(expected == Role::sender ? "channel is not a sender" : "channel is not a receiver");
}

void SecureChannel::require_session() const {
    if (!has_session_) throw ProvisioningError("no session key installed for this pair");
}

void SecureChannel::check_session_limit() const {
    if (ctr_ >= config_.session_limit)
        throw RekeyRequired("message counter reached session limit " + std::to_string(config_.session_limit));
}

}  // namespace leap
