#include <sstream>

#include "guardad/catalog.hpp"

namespace guardad {
namespace {

constexpr std::array kParticipantKinds = {EntityKind::Vehicle, EntityKind::Pedestrian, EntityKind::Bicycle,
                                          EntityKind::Motorcycle};

struct MotionSuffix {
  MotionTrend trend;
  const char* suffix;
};
constexpr std::array kMotionSuffixes = {MotionSuffix{MotionTrend::Approaching, "Approach"},
                                        MotionSuffix{MotionTrend::Receding, "Away"},
                                        MotionSuffix{MotionTrend::Crossing, "Crossing"}};

std::string motion_name(Region r, EntityKind k, const char* suffix) {
  return region_token(r) + "_" + std::string(name_of(k)) + "_" + suffix;
}

std::string exists_name(Region r, EntityKind k) {
  return region_token(r) + "_Region_" + std::string(name_of(k)) + "_Exists";
}

std::string build_default_catalog() {
  std::ostringstream out;
  out << "# Default safety catalog.\n"
         "# Regenerate with `guardad check --print-default`.\n"
         "\n"
         "# Action predicates: intended ego status implied by the policy output.\n";
  for (Action a : kAllActions) {
    out << "predicate " << name_of(a) << " : action(" << name_of(a) << ")\n";
  }

  out << "\n# Environment predicates.\n"
         "predicate Solid_Red_Light : environment(kind=TrafficLight, signal=Red)\n"
         "predicate Solid_Green_Light : environment(kind=TrafficLight, signal=Green)\n"
         "predicate Stop_Sign_Present : environment(kind=TrafficSign, sign=Stop)\n"
         "predicate Yield_Sign_Present : environment(kind=TrafficSign, sign=Yield)\n";

  out << "\n# Target-existence predicates.\n";
  for (Region r : all_of<Region>()) {
    for (EntityKind k : kParticipantKinds) {
      out << "predicate " << exists_name(r, k) << " : target_exists(region=" << name_of(r)
          << ", kind=" << name_of(k) << ")\n";
    }
  }

  out << "\n# Target-motion predicates.\n";
  for (Region r : all_of<Region>()) {
    for (EntityKind k : kParticipantKinds) {
      for (const auto& m : kMotionSuffixes) {
        out << "predicate " << motion_name(r, k, m.suffix) << " : target_motion(region=" << name_of(r)
            << ", kind=" << name_of(k) << ", trend=" << name_of(m.trend) << ")\n";
      }
    }
  }

  out << "\n# Constraints.\n"
         "constraint C_STOP_OR_DECEL allow {Stop, Decelerate} severity 4 says \"Only actions that stop or "
         "decelerate are allowed.\"\n"
         "constraint C_STOP_ONLY allow {Stop} severity 5 says \"Only the stop action is allowed.\"\n"
         "constraint C_PED_CAUTION allow {Stop, Decelerate} severity 5 says \"Yield to pedestrians: only actions "
         "that stop or decelerate are allowed.\"\n"
         "constraint C_NO_LEFT_TURN allow {Stop, Decelerate, KeepSpeed, Accelerate, TurnRight, LaneChangeRight} "
         "severity 3 says \"Turning or changing lanes to the left is not allowed.\"\n"
         "constraint C_NO_RIGHT_TURN allow {Stop, Decelerate, KeepSpeed, Accelerate, TurnLeft, LaneChangeLeft} "
         "severity 3 says \"Turning or changing lanes to the right is not allowed.\"\n"
         "constraint C_YIELD allow {Stop, Decelerate, KeepSpeed} severity 2 says \"Do not accelerate or turn "
         "until the way is clear.\"\n";

  out << "\n# Horn activation rules.\n"
         "rule R_bike: Front_Center_Bicycle_Approach => C_STOP_OR_DECEL says \"Cyclist approaching ahead.\"\n"
         "rule R_bike_cross: Front_Center_Bicycle_Crossing => C_STOP_OR_DECEL says \"Cyclist crossing ahead.\"\n"
         "rule R_moto: Front_Center_Motorcycle_Approach => C_STOP_OR_DECEL says \"Motorcycle approaching "
         "ahead.\"\n"
         "rule R_lead: Front_Center_Vehicle_Approach => C_STOP_OR_DECEL says \"Closing in on the vehicle "
         "ahead.\"\n"
         "rule R_cutin_left: Front_Left_Vehicle_Crossing => C_STOP_OR_DECEL says \"Vehicle cutting in from the "
         "left.\"\n"
         "rule R_cutin_right: Front_Right_Vehicle_Crossing => C_STOP_OR_DECEL says \"Vehicle cutting in from "
         "the right.\"\n"
         "rule R_red: Solid_Red_Light => C_STOP_OR_DECEL says \"Red light detected.\"\n"
         "rule R_stop_sign: Stop_Sign_Present => C_STOP_ONLY says \"Stop sign ahead.\"\n"
         "rule R_yield: Yield_Sign_Present => C_YIELD says \"Yield sign ahead.\"\n";
  for (Region r : {Region::FrontLeft, Region::FrontCenter, Region::FrontRight}) {
    out << "rule R_ped_" << name_of(r) << ": " << motion_name(r, EntityKind::Pedestrian, "Crossing")
        << " => C_PED_CAUTION says \"Pedestrian crossing ahead.\"\n";
  }
  out << "rule R_ped_ahead: Front_Center_Pedestrian_Approach => C_PED_CAUTION says \"Pedestrian in the ego "
         "lane.\"\n";

  struct Side {
    const char* name;
    std::array<Region, 3> regions;
    const char* constraint;
  };
  for (const Side& side : {Side{"left", {Region::FrontLeft, Region::Left, Region::RearLeft}, "C_NO_LEFT_TURN"},
                           Side{"right", {Region::FrontRight, Region::Right, Region::RearRight},
                                "C_NO_RIGHT_TURN"}}) {
    for (Region r : side.regions) {
      for (EntityKind k : {EntityKind::Vehicle, EntityKind::Motorcycle, EntityKind::Bicycle}) {
        out << "rule R_" << side.name << "_" << name_of(r) << "_" << name_of(k) << ": " << exists_name(r, k)
            << " & " << motion_name(r, k, "Approach") << " => " << side.constraint
            << " says \"Traffic approaching on the " << side.name << ".\"\n";
      }
    }
  }

  out << "\n# Weighted temporal rules.\n"
         "temporal T_persist (w=2.0): C_STOP_OR_DECEL@-1 & C_STOP_OR_DECEL@-2 => C_STOP_OR_DECEL says "
         "\"A hazard persisted over the last frames.\"\n"
         "temporal T_count (w=1.5): count(C_STOP_OR_DECEL >= 2 in last 4) => C_STOP_OR_DECEL says "
         "\"A hazard was present in recent frames.\"\n"
         "temporal T_ped_persist (w=2.0): C_PED_CAUTION@-1 & C_PED_CAUTION@-2 => C_PED_CAUTION says "
         "\"A pedestrian persisted near the lane.\"\n"
         "temporal T_ped_count (w=1.5): count(C_PED_CAUTION >= 2 in last 4) => C_PED_CAUTION says "
         "\"A pedestrian was recently seen near the lane.\"\n";
  return out.str();
}

}  // namespace

const std::string& default_catalog_text() {
  static const std::string text = build_default_catalog();
  return text;
}

const RuleCatalog& default_catalog() {
  static const RuleCatalog catalog = parse_catalog(default_catalog_text());
  return catalog;
}

}  // namespace guardad
