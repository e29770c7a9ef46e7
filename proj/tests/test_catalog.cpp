#include <doctest.h>

#include <fstream>
#include <sstream>

#include "guardad/catalog.hpp"
#include "guardad/error.hpp"

using namespace guardad;

TEST_CASE("minimal catalog") {
  const auto c = parse_catalog("constraint C allow {Stop} severity 5 says \"s\"\n");
  REQUIRE(c.constraints().size() == 1);
  CHECK(c.constraints()[0].id == "C");
  CHECK(c.constraints()[0].allowed == ActionSet{Action::Stop});
  CHECK(c.constraints()[0].severity == 5);
  CHECK(c.constraints()[0].says == "s");
}

TEST_CASE("full grammar") {
  const auto c = parse_catalog(R"(# comment line
predicate Decelerate : action(Decelerate)
predicate Red : environment(kind=TrafficLight, signal=Red)
predicate FC_Bike : target_exists(kind=Bicycle, region=FrontCenter)
predicate FC_Bike_Approach : target_motion(kind=Bicycle, region=FrontCenter, trend=Approaching)
constraint C_SLOW allow {Stop, Decelerate} severity 4 says "Slow down."   # trailing comment
rule R1: FC_Bike & FC_Bike_Approach => C_SLOW says "Cyclist ahead."
rule R2: Red => C_SLOW
temporal T1 (w=2.5): C_SLOW@-1 & !C_SLOW@-3 => C_SLOW says "Again."
temporal T2 (w=-0.5): count(C_SLOW >= 2 in last 4) => C_SLOW
)");
  CHECK(c.predicates().size() == 4);
  const PredicateDef* d = c.find_predicate("Decelerate");
  REQUIRE(d);
  CHECK(d->category == PredicateCategory::Action);
  CHECK(d->selector.action == Action::Decelerate);
  const PredicateDef* m = c.find_predicate("FC_Bike_Approach");
  REQUIRE(m);
  CHECK(m->selector.trend == MotionTrend::Approaching);

  const HornRule* r1 = c.find_horn_rule("R1");
  REQUIRE(r1);
  CHECK(r1->antecedent == std::vector<std::string>{"FC_Bike", "FC_Bike_Approach"});
  CHECK(r1->says == "Cyclist ahead.");
  CHECK(c.find_horn_rule("R2")->says.empty());
  CHECK(c.horn_rule_is_signal(1));
  CHECK_FALSE(c.horn_rule_is_signal(0));

  REQUIRE(c.temporal_rules().size() == 2);
  const TemporalRule& t1 = c.temporal_rules()[0];
  CHECK(t1.weight == doctest::Approx(2.5));
  REQUIRE(t1.body.size() == 2);
  CHECK(std::get<AtOffset>(t1.body[0]) == AtOffset{1, "C_SLOW", true});
  CHECK(std::get<AtOffset>(t1.body[1]) == AtOffset{3, "C_SLOW", false});
  const TemporalRule& t2 = c.temporal_rules()[1];
  CHECK(t2.weight == doctest::Approx(-0.5));
  CHECK(std::get<CountAtLeast>(t2.body[0]) == CountAtLeast{"C_SLOW", 2, 4});
}

TEST_CASE("semantic errors") {
  CHECK_THROWS_AS(parse_catalog("constraint C allow {Stop} severity 1 says \"s\"\nrule R: P_x => C\n"),
                  UnknownReference);
  CHECK_THROWS_AS(parse_catalog("constraint C allow {} severity 1 says \"s\"\n"), EmptyAllowedSet);
  CHECK_THROWS_AS(parse_catalog("constraint C allow {Stop} severity 1 says \"a\"\n"
                                "constraint C allow {Stop} severity 1 says \"b\"\n"),
                  DuplicateId);
  CHECK_THROWS_AS(parse_catalog("constraint C allow {Stop} severity 9 says \"s\"\n"), CatalogError);
  CHECK_THROWS_AS(parse_catalog("predicate P : action(Stop)\n"
                                "rule R: P => C_missing\n"),
                  UnknownReference);
  CHECK_THROWS_AS(parse_catalog("constraint C allow {Stop} severity 1 says \"s\"\n"
                                "temporal T (w=1): count(C >= 5 in last 4) => C\n"),
                  CatalogError);
  CHECK_THROWS_AS(parse_catalog("constraint C allow {Stop} severity 1 says \"s\"\n"
                                "temporal T (w=1): D@-1 => C\n"),
                  UnknownReference);
  CHECK_THROWS_AS(parse_catalog("predicate P : environment(kind=Bicycle)\n"), CatalogError);
  CHECK_THROWS_AS(parse_catalog("predicate P : action(kind=Bicycle)\n"), Error);
}

TEST_CASE("syntax errors carry line and column") {
  try {
    parse_catalog("constraint C allow {Stop} severity 1 says \"s\"\n\nrule R C\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 8);
    CHECK(std::string(e.what()).rfind("3:8:", 0) == 0);
  }
  CHECK_THROWS_AS(parse_catalog("constraint C allow {Stop} severity 1 says \"unterminated\n"), ParseError);
  CHECK_THROWS_AS(parse_catalog("constraint C allow {Fly} severity 1 says \"s\"\n"), ParseError);
  CHECK_THROWS_AS(parse_catalog("constraint C allow {Stop} severity 1 says \"s\"\n"
                                "temporal T (w=1): C@0 => C\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_catalog("bogus line\n"), ParseError);
}

TEST_CASE("default catalog content") {
  const RuleCatalog& c = default_catalog();
  CHECK(c.predicates().size() == 8 + 4 + 32 + 96);

  const HornRule* bike = c.find_horn_rule("R_bike");
  REQUIRE(bike);
  CHECK(bike->antecedent == std::vector<std::string>{"Front_Center_Bicycle_Approach"});
  CHECK(bike->consequent == "C_STOP_OR_DECEL");
  const Constraint* sd = c.find_constraint("C_STOP_OR_DECEL");
  REQUIRE(sd);
  CHECK(sd->allowed == ActionSet{Action::Stop, Action::Decelerate});
  CHECK(sd->says == "Only actions that stop or decelerate are allowed.");
  const HornRule* red = c.find_horn_rule("R_red");
  REQUIRE(red);
  CHECK(red->antecedent == std::vector<std::string>{"Solid_Red_Light"});
  CHECK(red->consequent == "C_STOP_OR_DECEL");
  for (const char* region : {"FrontLeft", "FrontCenter", "FrontRight"}) {
    CHECK(c.find_horn_rule(std::string("R_ped_") + region));
  }
  CHECK(c.find_horn_rule("R_left_Left_Vehicle"));
  CHECK(c.find_horn_rule("R_right_FrontRight_Bicycle"));
  CHECK(c.find_predicate("Rear_Left_Region_Motorcycle_Exists"));
  CHECK(c.find_predicate("Front_Right_Pedestrian_Away"));
}

TEST_CASE("shipped rules file matches the built-in catalog") {
  std::ifstream in(GUARDAD_SOURCE_DIR "/rules/default.gsl");
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == default_catalog_text());
  const RuleCatalog loaded = load_catalog(GUARDAD_SOURCE_DIR "/rules/default.gsl");
  CHECK(loaded.horn_rules() == default_catalog().horn_rules());
  CHECK(loaded.temporal_rules() == default_catalog().temporal_rules());
  CHECK_THROWS_AS(load_catalog("/nonexistent/catalog.gsl"), ConfigError);
}

TEST_CASE("restriction drops rules over removed predicates") {
  const RuleCatalog& c = default_catalog();
  const RuleCatalog s = c.restricted_to({PredicateCategory::Action, PredicateCategory::Environment});
  for (const auto& p : s.predicates()) {
    CHECK((p.category == PredicateCategory::Action || p.category == PredicateCategory::Environment));
  }
  CHECK(s.find_horn_rule("R_red"));
  CHECK_FALSE(s.find_horn_rule("R_bike"));
  CHECK(s.constraints() == c.constraints());
  CHECK(s.temporal_rules() == c.temporal_rules());

  const RuleCatalog t = c.restricted_to({PredicateCategory::TargetExistence, PredicateCategory::TargetMotion});
  CHECK(t.find_horn_rule("R_bike"));
  CHECK_FALSE(t.find_horn_rule("R_red"));
}

TEST_CASE("predicate matching respects categories") {
  PredicateDef env{"Red", PredicateCategory::Environment, {}};
  env.selector.signal = SignalState::Red;
  Entity tl{"tl", EntityKind::TrafficLight, Region::FrontCenter, MotionTrend::Stationary, SignalState::Red};
  CHECK(predicate_matches(env, tl, Action::Stop));
  tl.signal = SignalState::Green;
  CHECK_FALSE(predicate_matches(env, tl, Action::Stop));

  PredicateDef exists{"Ped", PredicateCategory::TargetExistence, {}};
  exists.selector.kind = EntityKind::Pedestrian;
  Entity ped{"p", EntityKind::Pedestrian, Region::Left, MotionTrend::Crossing};
  CHECK(predicate_matches(exists, ped, Action::Stop));
  CHECK_FALSE(predicate_matches(exists, tl, Action::Stop));

  PredicateDef act{"Stop", PredicateCategory::Action, {}};
  act.selector.action = Action::Stop;
  Entity ego{"ego", EntityKind::Ego, std::nullopt};
  CHECK(predicate_matches(act, ego, Action::Stop));
  CHECK_FALSE(predicate_matches(act, ego, Action::KeepSpeed));
  CHECK_FALSE(predicate_matches(act, ped, Action::Stop));
}
