#pragma once

// Closed permission vocabulary: every cloud API the model understands, the
// canonical token it compiles to, and the attack role it plays.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cloudlens/error.hpp"

namespace cloudlens {

using PermIx = std::uint32_t;

/// Which slot kind a permission targets. `Any` is reserved for full_control.
enum class PermFamily : std::uint8_t { Identity, Datastore, Any };

/// The attack-relevant role of a permission (third column of the API table).
enum class PermRole : std::uint8_t {
  None,
  Structural,      // assumeRole, belongsTo, hasPolicy
  Wildcard,        // full_control
  Persistence,     // gainPersistenceAction rows
  Login,           // changeUserLogin rows
  IdentityDelete,  // Delete* rows over identities and policies
  ObjectRead,
  ObjectWrite,
  ObjectDelete,
  ObjectCopy,
  BucketDelete,
  PublicBucket,    // createPublicBucket rows
  KeyCreation,     // encryptSensitiveData row
  TestOnly,        // reduction-only extension tokens
};

/// How a granted API compiles. `Direct` yields a 3-tuple with the token
/// itself; the rest yield 4-tuples (identity_4tuple_pred rows).
enum class CompileRule : std::uint8_t {
  Direct,
  AttachPolicy,    // <holder, resource, hasPolicy, adminPolicy | tagged PID>
  AddToGroup,      // <holder, any_user, belongsTo, resource>
  TrustUpdate,     // <holder, any_user, assumeRole, resource>
  AccessKey,       // <holder, any_user, assumeRole, resource>
  PolicyVersion,   // <holder, X, hasPolicy, adminPolicy> for X attached to resource
};

struct PermissionInfo {
  std::string token;
  std::string aws_action;  // empty for structural tokens
  PermFamily family = PermFamily::Identity;
  PermRole role = PermRole::None;
  CompileRule rule = CompileRule::Direct;
  bool resource_agnostic = false;  // any resource maps to the family sentinel
  bool flow_activating = false;    // participates in isFlowActive
};

class Vocabulary {
 public:
  /// Production vocabulary.
  static Vocabulary standard() { return Vocabulary(standard_entries()); }

  /// Standard vocabulary plus extra tokens (used by reduction instances).
  static Vocabulary with_extension(std::vector<PermissionInfo> extra) {
    auto entries = standard_entries();
    for (auto& e : extra) entries.push_back(std::move(e));
    return Vocabulary(std::move(entries));
  }

  std::size_t size() const noexcept { return perms_.size(); }
  const PermissionInfo& info(PermIx ix) const { return perms_.at(ix); }
  const std::string& token(PermIx ix) const { return perms_.at(ix).token; }
  const std::vector<PermissionInfo>& entries() const noexcept { return perms_; }

  std::optional<PermIx> find(std::string_view token) const {
    auto it = by_token_.find(std::string(token));
    if (it == by_token_.end()) return std::nullopt;
    return it->second;
  }

  PermIx require(std::string_view token) const {
    if (auto ix = find(token)) return *ix;
    throw Error("unknown permission token '" + std::string(token) + "'");
  }

  /// Case-insensitive lookup by cloud API name, e.g. "s3:GetObject".
  std::optional<PermIx> find_aws(std::string_view action) const {
    auto it = by_aws_.find(lower(action));
    if (it == by_aws_.end()) return std::nullopt;
    return it->second;
  }

  bool is_flow_activating(PermIx ix) const { return perms_[ix].flow_activating; }

  // Well-known tokens the action semantics refer to directly.
  PermIx full_control() const noexcept { return full_control_; }
  PermIx assume_role() const noexcept { return assume_role_; }
  PermIx belongs_to() const noexcept { return belongs_to_; }
  PermIx has_policy() const noexcept { return has_policy_; }
  PermIx get_object() const noexcept { return get_object_; }
  PermIx put_object() const noexcept { return put_object_; }
  PermIx delete_object() const noexcept { return delete_object_; }
  PermIx copy_object() const noexcept { return copy_object_; }
  PermIx delete_bucket() const noexcept { return delete_bucket_; }
  PermIx create_bucket() const noexcept { return create_bucket_; }
  PermIx put_bucket_acl() const noexcept { return put_bucket_acl_; }
  PermIx create_key() const noexcept { return create_key_; }

  static std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
  }

 private:
  explicit Vocabulary(std::vector<PermissionInfo> entries) : perms_(std::move(entries)) {
    std::sort(perms_.begin(), perms_.end(),
              [](const auto& a, const auto& b) { return a.token < b.token; });
    for (PermIx i = 0; i < perms_.size(); ++i) {
      if (!by_token_.emplace(perms_[i].token, i).second)
        throw Error("duplicate permission token '" + perms_[i].token + "'");
      if (!perms_[i].aws_action.empty()) by_aws_.emplace(lower(perms_[i].aws_action), i);
    }
    full_control_ = require("full_control");
    assume_role_ = require("assumeRole");
    belongs_to_ = require("belongsTo");
    has_policy_ = require("hasPolicy");
    get_object_ = require("s3_GetObject");
    put_object_ = require("s3_PutObject");
    delete_object_ = require("s3_DeleteObject");
    copy_object_ = require("s3_CopyObject");
    delete_bucket_ = require("deleteBucket");
    create_bucket_ = require("s3_CreateBucket");
    put_bucket_acl_ = require("s3_PutBucketAcl");
    create_key_ = require("kms_CreateKey");
  }

  static std::vector<PermissionInfo> standard_entries() {
    using F = PermFamily;
    using R = PermRole;
    using C = CompileRule;
    auto id = [](std::string aws, R role, C rule = C::Direct, bool agnostic = false) {
      std::string token = aws;
      std::replace(token.begin(), token.end(), ':', '_');
      return PermissionInfo{token, aws, F::Identity, role, rule, agnostic, false};
    };
    auto ds = [](std::string aws, R role, bool agnostic = false) {
      std::string token = aws;
      std::replace(token.begin(), token.end(), ':', '_');
      return PermissionInfo{token, aws, F::Datastore, role, C::Direct, agnostic, false};
    };
    return {
        // Structural relations and the wildcard.
        {"assumeRole", "sts:AssumeRole", F::Identity, R::Structural, C::Direct, false, true},
        {"belongsTo", "", F::Identity, R::Structural, C::Direct, false, true},
        {"hasPolicy", "", F::Identity, R::Structural, C::Direct, false, true},
        {"full_control", "", F::Any, R::Wildcard, C::Direct, false, false},
        // IAM / user
        id("iam:CreateUser", R::Persistence),
        id("iam:CreateLoginProfile", R::Login),
        id("iam:UpdateLoginProfile", R::Persistence),
        id("iam:PutUserPolicy", R::None, C::AttachPolicy),
        id("iam:DeleteUserPolicy", R::IdentityDelete),
        id("iam:AttachUserPolicy", R::None, C::AttachPolicy),
        id("iam:DetachUserPolicy", R::None),
        id("iam:ChangePassword", R::Login),
        id("iam:CreateAccessKey", R::None, C::AccessKey),
        id("iam:DeleteAccessKey", R::IdentityDelete),
        id("iam:UpdateAccessKey", R::None),
        id("iam:DeactivateMFADevice", R::None),
        // IAM / group
        id("iam:DeleteGroup", R::IdentityDelete),
        id("iam:PutGroupPolicy", R::None, C::AttachPolicy),
        id("iam:AttachGroupPolicy", R::None, C::AttachPolicy),
        id("iam:AddUserToGroup", R::None, C::AddToGroup),
        id("iam:RemoveUserFromGroup", R::None),
        // IAM / role (AssumeRole is the structural assumeRole above)
        id("iam:UpdateAssumeRolePolicy", R::None, C::TrustUpdate),
        id("iam:DeleteRole", R::IdentityDelete),
        id("iam:PutRolePolicy", R::None, C::AttachPolicy),
        id("iam:DeleteRolePolicy", R::IdentityDelete),
        id("iam:AttachRolePolicy", R::None, C::AttachPolicy),
        id("iam:DetachRolePolicy", R::None),
        // IAM / policy
        id("iam:DeletePolicy", R::IdentityDelete),
        id("iam:CreatePolicyVersion", R::None, C::PolicyVersion),
        // Lambda, EC2, SSM: persistence footholds on unmodeled resources
        id("lambda:CreateFunction", R::Persistence, C::Direct, true),
        id("lambda:UpdateFunctionCode", R::Persistence, C::Direct, true),
        id("ec2:RunInstances", R::Persistence, C::Direct, true),
        id("ec2:ModifyInstanceAttribute", R::Persistence, C::Direct, true),
        id("ssm:SendCommand", R::Persistence, C::Direct, true),
        id("ssm:StartSession", R::Persistence, C::Direct, true),
        // S3
        ds("s3:GetObject", R::ObjectRead),
        ds("s3:PutObject", R::ObjectWrite),
        ds("s3:DeleteObject", R::ObjectDelete),
        ds("s3:CopyObject", R::ObjectCopy),
        ds("s3:CreateBucket", R::PublicBucket, true),
        {"deleteBucket", "s3:DeleteBucket", F::Datastore, R::BucketDelete, C::Direct, false, false},
        ds("s3:PutBucketAcl", R::PublicBucket),
        // KMS
        ds("kms:CreateKey", R::KeyCreation, true),
    };
  }

  std::vector<PermissionInfo> perms_;
  std::unordered_map<std::string, PermIx> by_token_;
  std::unordered_map<std::string, PermIx> by_aws_;
  PermIx full_control_{}, assume_role_{}, belongs_to_{}, has_policy_{}, get_object_{},
      put_object_{}, delete_object_{}, copy_object_{}, delete_bucket_{}, create_bucket_{},
      put_bucket_acl_{}, create_key_{};
};

}  // namespace cloudlens
