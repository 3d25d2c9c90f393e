#include "caplan/contacts.hpp"

#include <algorithm>
#include <cmath>

namespace caplan {

EndEffector mirrored_ee(EndEffector e) {
  switch (e) {
    case EndEffector::LeftFoot: return EndEffector::RightFoot;
    case EndEffector::RightFoot: return EndEffector::LeftFoot;
    case EndEffector::LeftPalm: return EndEffector::RightPalm;
    case EndEffector::RightPalm: return EndEffector::LeftPalm;
  }
  return e;
}

std::string to_string(EndEffector e) {
  switch (e) {
    case EndEffector::LeftFoot: return "left_foot";
    case EndEffector::RightFoot: return "right_foot";
    case EndEffector::LeftPalm: return "left_palm";
    case EndEffector::RightPalm: return "right_palm";
  }
  return "left_foot";
}

EndEffector end_effector_from_string(const std::string& s) {
  if (s == "left_foot") return EndEffector::LeftFoot;
  if (s == "right_foot") return EndEffector::RightFoot;
  if (s == "left_palm") return EndEffector::LeftPalm;
  if (s == "right_palm") return EndEffector::RightPalm;
  throw ValidationError("unknown end effector: " + s);
}

ContactPose ContactPose::mirrored_xz() const {
  ContactPose out = *this;
  out.end_effector = mirrored_ee(end_effector);
  out.pose = pose.mirrored_xz();
  return out;
}

void ContactPose::validate(std::span<const Surface> env) const {
  const Surface* s = nullptr;
  for (const Surface& cand : env) {
    if (cand.id == surface) {
      s = &cand;
      break;
    }
  }
  if (!s) throw ValidationError("contact references unknown surface '" + surface + "'");
  if (!s->contains(pose.position, 1e-6))
    throw ValidationError("contact for " + to_string(end_effector) + " not on surface '" +
                          surface + "'");
  const Vec3 z = pose.rotation().col(2);
  const double cosang = std::clamp(z.dot(s->normal), -1.0, 1.0);
  if (std::acos(cosang) > 1e-6)
    throw ValidationError("contact for " + to_string(end_effector) +
                          " not aligned with surface normal of '" + surface + "'");
}

const ContactPose* Stance::find(EndEffector e) const {
  for (const ContactPose& c : contacts)
    if (c.end_effector == e) return &c;
  return nullptr;
}

int Stance::foot_count() const {
  int n = 0;
  for (const ContactPose& c : contacts)
    if (is_foot(c.end_effector)) ++n;
  return n;
}

Vec3 Stance::mean_foot_position() const {
  Vec3 sum = Vec3::Zero();
  int n = 0;
  for (const ContactPose& c : contacts) {
    if (is_foot(c.end_effector)) {
      sum += c.pose.position;
      ++n;
    }
  }
  return n > 0 ? Vec3(sum / n) : sum;
}

Stance Stance::mirrored_xz() const {
  Stance out;
  out.contacts.reserve(contacts.size());
  for (const ContactPose& c : contacts) out.contacts.push_back(c.mirrored_xz());
  std::sort(out.contacts.begin(), out.contacts.end(),
            [](const ContactPose& a, const ContactPose& b) {
              return static_cast<int>(a.end_effector) < static_cast<int>(b.end_effector);
            });
  return out;
}

Stance Stance::with_replaced(const ContactPose& c) const {
  Stance out = *this;
  for (ContactPose& existing : out.contacts) {
    if (existing.end_effector == c.end_effector) {
      existing = c;
      return out;
    }
  }
  out.contacts.push_back(c);
  return out;
}

void Stance::validate(std::span<const Surface> env) const {
  if (contacts.empty() || contacts.size() > 4)
    throw ValidationError("stance must have between 1 and 4 contacts");
  for (size_t i = 0; i < contacts.size(); ++i)
    for (size_t j = i + 1; j < contacts.size(); ++j)
      if (contacts[i].end_effector == contacts[j].end_effector)
        throw ValidationError("stance has duplicate end effector " +
                              to_string(contacts[i].end_effector));
  if (foot_count() == 0) throw ValidationError("stance has no foot contact");
  for (const ContactPose& c : contacts) c.validate(env);
}

}  // namespace caplan
