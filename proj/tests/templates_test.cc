//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "rxnseq/templates.h"

#include <cstdlib>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "rxnseq/parallel.h"
#include "rxnseq/smiles.h"
#include "support/random_molecules.h"

namespace rxnseq {
namespace {

const std::string kTemplateFile = std::string(RXNSEQ_DATA_DIR) + "/templates.rxt";

const ReactionTemplate &shipped(const std::string &name) {
  static const std::vector<ReactionTemplate> all = load_templates(kTemplateFile);
  for (const auto &t: all) {
    if (t.name == name) {
      return t;
    }
  }
  throw std::runtime_error("no template " + name);
}

ReactionTemplate single_template(const std::string &line) {
  std::istringstream in(line);
  auto ts = parse_templates(in);
  EXPECT_EQ(ts.size(), 1u);
  return ts.at(0);
}

TEST(PatternTest, ParsesConstraints) {
  Pattern p = Pattern::parse("[C;D2-3;H1;+0:4]=[o:2]C");
  ASSERT_EQ(p.num_atoms(), 3);
  const PatternAtom &a = p.atoms()[0];
  EXPECT_EQ(a.element, "C");
  EXPECT_EQ(a.min_degree, 2);
  EXPECT_EQ(a.max_degree, 3);
  EXPECT_EQ(a.min_hydrogens, 1);
  EXPECT_EQ(a.max_hydrogens, 1);
  EXPECT_EQ(a.charge, 0);
  EXPECT_EQ(a.map, 4);
  EXPECT_TRUE(p.atoms()[1].aromatic);
  EXPECT_EQ(p.atoms()[1].element, "O");
  ASSERT_EQ(p.bonds().size(), 2u);
  EXPECT_EQ(p.bonds()[0].order, BondOrder::kDouble);
  EXPECT_EQ(p.atom_with_map(2), 1);
}

TEST(PatternTest, RingsAndIntroducedAtoms) {
  Pattern p = Pattern::parse("[C:1]1[C:2][O;new]1");
  EXPECT_EQ(p.bonds().size(), 3u);
  EXPECT_TRUE(p.atoms()[2].introduced);
  EXPECT_TRUE(p.connected());
  EXPECT_FALSE(Pattern::parse("C").atoms()[0].introduced);
}

TEST(PatternTest, RejectsMalformedText) {
  for (const char *bad: { "", "[C", "[C;Q1]", "[C:1][C:1]", "C.C", "C(C",
                          "[c;D3-1]", "CC>C", "[C;H]" }) {
    EXPECT_THROW(Pattern::parse(bad), PatternError) << bad;
  }
}

TEST(MatchPatternTest, DoubleBondOrientations) {
  auto m = match_pattern(Pattern::parse("C=C"), parse_smiles("CC=C(C)C"));
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0], (Embedding { 1, 2 }));
  EXPECT_EQ(m[1], (Embedding { 2, 1 }));
}

TEST(MatchPatternTest, AbsentMotif) {
  EXPECT_TRUE(match_pattern(Pattern::parse("C=C"), parse_smiles("CCO")).empty());
}

TEST(MatchPatternTest, SingleAtomSymmetry) {
  EXPECT_EQ(match_pattern(Pattern::parse("C"), parse_smiles("CC")).size(), 2u);
}

TEST(MatchPatternTest, DegreeHydrogenAndChargeConstraints) {
  MolGraph g = parse_smiles("CC(C)(C)CO");
  EXPECT_EQ(match_pattern(Pattern::parse("[C;D4]"), g).size(), 1u);
  EXPECT_EQ(match_pattern(Pattern::parse("[C;H3]"), g).size(), 3u);
  EXPECT_EQ(match_pattern(Pattern::parse("[C;H2][O;H1]"), g).size(), 1u);
  EXPECT_EQ(match_pattern(Pattern::parse("[N;+1]"), parse_smiles("C[NH3+]")).size(),
            1u);
  EXPECT_TRUE(match_pattern(Pattern::parse("[N;+0]"), parse_smiles("C[NH3+]")).empty());
}

TEST(MatchPatternTest, AromaticAtomsAndBonds) {
  MolGraph benzene = parse_smiles("c1ccccc1");
  EXPECT_EQ(match_pattern(Pattern::parse("cc"), benzene).size(), 12u);
  EXPECT_TRUE(match_pattern(Pattern::parse("CC"), benzene).empty());
  EXPECT_TRUE(match_pattern(Pattern::parse("c-c"), benzene).empty());
}

TEST(MatchPatternTest, SingleMatchesDirectionalBonds) {
  EXPECT_EQ(match_pattern(Pattern::parse("FC=CF"), parse_smiles("F/C=C/F")).size(),
            2u);
}

TEST(MatchPatternTest, AgreesWithBruteForce) {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 150; ++trial) {
    MolGraph g = testing::random_molecule(rng, 2 + static_cast<int>(rng() % 9));
    Pattern p = Pattern::parse(testing::random_pattern_text(rng, 4));
    EXPECT_EQ(match_pattern(p, g), testing::brute_force_matches(p, g))
        << p.text() << " on " << canonical_smiles(g);
  }
}

TEST(LoadTemplatesTest, ShippedFileCoversSubstrateClasses) {
  auto ts = load_templates(kTemplateFile);
  EXPECT_GE(ts.size(), 12u);
  std::set<std::string> classes;
  for (const auto &t: ts) {
    classes.insert(t.name.substr(0, t.name.find('_')));
  }
  for (const char *c: { "alkene", "alkyne", "alcohol", "ketone", "aldehyde", "acid",
                        "ester" }) {
    EXPECT_TRUE(classes.count(c)) << c;
  }
}

TEST(LoadTemplatesTest, HydrohalogenationEntry) {
  const ReactionTemplate &t = shipped("alkene_hydrochlorination");
  EXPECT_EQ(t.substrate.num_atoms(), 2);
  EXPECT_EQ(t.substrate.bonds()[0].order, BondOrder::kDouble);
  EXPECT_EQ(t.coreactants, std::vector<std::string> { "Cl" });
  EXPECT_TRUE(t.reagents.empty());
}

TEST(LoadTemplatesTest, EmptyFile) {
  std::istringstream in("");
  EXPECT_TRUE(parse_templates(in).empty());
  std::istringstream comments("# nothing\n\n   # here\n");
  EXPECT_TRUE(parse_templates(comments).empty());
}

TEST(LoadTemplatesTest, UnboundMapNumber) {
  std::istringstream in("bad | [C:1]=[C:2] | Cl | | [C:1][C:2][Cl]\n");
  try {
    parse_templates(in);
    FAIL() << "expected TemplateError";
  } catch (const TemplateError &e) {
    EXPECT_EQ(e.kind(), TemplateError::Kind::kUnboundMapNumber);
    EXPECT_EQ(e.template_name(), "bad");
  }
  std::istringstream stray("bad | [C:1]=[C:2] | | | [C:1][C:3]\n");
  EXPECT_THROW(parse_templates(stray), TemplateError);
}

TEST(LoadTemplatesTest, SyntaxErrorCarriesLine) {
  std::istringstream in("# header\nok | [C:1]=[C:2] | | | [C:1][C:2]\nbroken | [C:1\n");
  try {
    parse_templates(in);
    FAIL() << "expected TemplateError";
  } catch (const TemplateError &e) {
    EXPECT_EQ(e.kind(), TemplateError::Kind::kSyntax);
    EXPECT_EQ(e.line(), 3);
  }
  std::istringstream fields("x | C | C\n");
  EXPECT_THROW(parse_templates(fields), TemplateError);
  std::istringstream selectivity("x | [C:1]=[C:2] | | | [C:1][C:2] | sideways\n");
  EXPECT_THROW(parse_templates(selectivity), TemplateError);
  std::istringstream molecule("x | [C:1]=[C:2] | C( | | [C:1][C:2]\n");
  EXPECT_THROW(parse_templates(molecule), TemplateError);
}

TEST(ApplyTemplateTest, MarkovnikovHydrochlorination) {
  auto records = apply_template(shipped("alkene_hydrochlorination"),
                                parse_smiles("CC=C(C)C"));
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].to_string(), "CC=C(C)C.Cl>>" + canonical_smiles("CCC(C)(C)Cl"));
  EXPECT_EQ(records[0].source, ReactionSource::kGenerated);
}

TEST(ApplyTemplateTest, Chloroethane) {
  auto records = apply_template(shipped("alkene_hydrochlorination"),
                                parse_smiles("C=C"));
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].products, std::vector<std::string> { "CCCl" });
}

TEST(ApplyTemplateTest, NoMatch) {
  EXPECT_TRUE(apply_template(shipped("alkene_hydrochlorination"), parse_smiles("CCO"))
                  .empty());
}

TEST(ApplyTemplateTest, AntiMarkovnikov) {
  auto records = apply_template(shipped("alkene_hydroboration_oxidation"),
                                parse_smiles("C=CC"));
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].products, std::vector<std::string> { canonical_smiles("OCCC") });
  EXPECT_EQ(records[0].reagents, (std::vector<std::string> { "B", "OO" }));
}

TEST(ApplyTemplateTest, RingFormationAndDeletion) {
  auto epoxide = apply_template(shipped("alkene_epoxidation"), parse_smiles("C=C"));
  ASSERT_EQ(epoxide.size(), 1u);
  EXPECT_EQ(epoxide[0].products, std::vector<std::string> { canonical_smiles("C1CO1") });

  auto bromide = apply_template(shipped("alcohol_bromination"), parse_smiles("CCO"));
  ASSERT_EQ(bromide.size(), 1u);
  EXPECT_EQ(bromide[0].products, std::vector<std::string> { canonical_smiles("CCBr") });

  auto acid = apply_template(shipped("ester_hydrolysis"), parse_smiles("CC(=O)OCC"));
  ASSERT_EQ(acid.size(), 1u);
  EXPECT_EQ(acid[0].products, std::vector<std::string> { canonical_smiles("CC(=O)O") });
}

TEST(ApplyTemplateTest, BondOrderChanges) {
  auto ketone = apply_template(shipped("alkyne_hydration"), parse_smiles("C#CC"));
  ASSERT_EQ(ketone.size(), 1u);
  EXPECT_EQ(ketone[0].products, std::vector<std::string> { canonical_smiles("CC(C)=O") });

  auto alcohol = apply_template(shipped("ketone_reduction"), parse_smiles("CC(=O)C"));
  ASSERT_EQ(alcohol.size(), 1u);
  EXPECT_EQ(alcohol[0].products, std::vector<std::string> { canonical_smiles("CC(O)C") });
  EXPECT_EQ(alcohol[0].reagents.size(), 2u);
}

TEST(ApplyTemplateTest, HydrationExample) {
  ReactionTemplate t =
      single_template("hydration | [C:1]=[C:2] | O | | [C:1][C:2][O;new]");
  auto records = apply_template(t, parse_smiles("C=C"));
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].to_string(), "C=C.O>>CCO");
}

TEST(ApplyTemplateTest, ImpossibleEditRaisesValenceError) {
  ReactionTemplate t =
      single_template("overfill | [C;H0:1] | | | [C:1][O;new]");
  EXPECT_THROW(apply_template(t, parse_smiles("CC(C)(C)C")), ValenceError);
}

TEST(ApplyTemplateTest, ProductsParseAndRecordsAreNormalized) {
  auto ts = load_templates(kTemplateFile);
  std::vector<std::string> substrates = {
    "C=C",   "CC=C(C)C", "C#CC",     "CCO",      "CC(O)C",   "CC=O",
    "CC(=O)C", "CC(=O)O", "CC(=O)OC", "CC(=O)Cl", "CCBr",    "CCI",
  };
  int applied = 0;
  for (const auto &t: ts) {
    for (const auto &s: substrates) {
      for (const ReactionRecord &r: apply_template(t, parse_smiles(s))) {
        ++applied;
        for (const auto *part: { &r.reactants, &r.reagents, &r.products }) {
          EXPECT_TRUE(std::is_sorted(part->begin(), part->end()));
          for (const auto &m: *part) {
            EXPECT_TRUE(validate(tokenize(m)).ok()) << m;
            EXPECT_EQ(canonical_smiles(m), m) << t.name << " " << s;
          }
        }
      }
    }
  }
  EXPECT_GE(applied, static_cast<int>(ts.size()));
}

TEST(FunctionalGroupTest, CountsDistinctGroups) {
  EXPECT_EQ(find_functional_groups(parse_smiles("CCCC")).size(), 0u);
  EXPECT_EQ(find_functional_groups(parse_smiles("CC(=O)O")).size(), 1u);
  EXPECT_EQ(find_functional_groups(parse_smiles("CC(=O)OC")).size(), 1u);
  EXPECT_EQ(find_functional_groups(parse_smiles("C=CCO")).size(), 2u);
  EXPECT_EQ(find_functional_groups(parse_smiles("CC#N")).size(), 1u);
  EXPECT_EQ(find_functional_groups(parse_smiles("COC")).size(), 1u);
  EXPECT_EQ(find_functional_groups(parse_smiles("FCCF")).size(), 2u);
}

TEST(EnumerateSubstratesTest, HalideVariants) {
  SubstrateSet s = enumerate_substrates({ "CF" }, SubstrateFilter {});
  EXPECT_EQ(s.smiles, (std::vector<std::string> { "CF", "CCl", canonical_smiles("CBr"), "CI" }));
}

TEST(EnumerateSubstratesTest, Filters) {
  SubstrateFilter f;
  EXPECT_TRUE(enumerate_substrates({ "CC(C)(C)CBr" }, f).molecules.empty());
  EXPECT_TRUE(enumerate_substrates({ "CCCCCCCCCCC" }, f).molecules.empty());
  EXPECT_EQ(enumerate_substrates({ "CCCCCCCCCC" }, f).molecules.size(), 1u);
  EXPECT_TRUE(enumerate_substrates({ "C=CCO" }, f).molecules.empty());
  f.min_atoms = 3;
  EXPECT_TRUE(enumerate_substrates({ "CC" }, f).molecules.empty());
}

TEST(EnumerateSubstratesTest, DeduplicatesAndReportsInvalid) {
  SubstrateSet s = enumerate_substrates({ "OCC", "CCO", "C(", "", "# c", "CC=C extra" },
                                        SubstrateFilter {});
  EXPECT_EQ(s.smiles, (std::vector<std::string> { "CCO", "C=CC" }));
  EXPECT_EQ(s.invalid_lines, std::vector<std::string> { "C(" });
}

TEST(GenerateDatasetTest, HydrationGrid) {
  auto t = single_template("hydration | [C:1]=[C:2] | O | | [C:1][C:2][O;new]");
  GenerationResult r = generate_dataset({ t }, { parse_smiles("C=C") });
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].to_string(), "C=C.O>>CCO");
}

TEST(GenerateDatasetTest, EmptySubstrates) {
  auto ts = load_templates(kTemplateFile);
  EXPECT_TRUE(generate_dataset(ts, std::vector<MolGraph> {}).records.empty());
}

TEST(GenerateDatasetTest, TwoTemplatesOneSubstrate) {
  GenerationResult r = generate_dataset(
      { shipped("alkene_hydrochlorination"), shipped("alkene_hydration") },
      { parse_smiles("CC=C") });
  EXPECT_EQ(r.records.size(), 2u);
}

TEST(GenerateDatasetTest, FailuresAreCollected) {
  auto t = single_template("overfill | [C;H0:1] | | | [C:1][O;new]");
  GenerationResult r = generate_dataset(
      { t, shipped("alkene_hydration") },
      { parse_smiles("CC(C)(C)C"), parse_smiles("C=C") });
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].template_name, "overfill");
  EXPECT_EQ(r.records.size(), 1u);
}

TEST(GenerateDatasetTest, IndependentOfThreadCount) {
  auto ts = load_templates(kTemplateFile);
  std::vector<std::string> raw = { "C=C", "CC=CC", "C#CC", "CCO", "CC(O)CC",
                                   "CCC=O", "CC(=O)CC", "CCC(=O)O", "CCF" };
  SubstrateSet s = enumerate_substrates(raw, SubstrateFilter {});
  ::setenv("RXNSEQ_THREADS", "1", 1);
  auto serial = generate_dataset(ts, s.molecules);
  ::setenv("RXNSEQ_THREADS", "4", 1);
  auto threaded = generate_dataset(ts, s.molecules);
  ::unsetenv("RXNSEQ_THREADS");
  EXPECT_EQ(serial.records, threaded.records);
  EXPECT_GT(serial.records.size(), 10u);
}

TEST(ParallelForTest, CoversEveryIndexAndRethrows) {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 100);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 7) {
                   throw std::runtime_error("boom");
                 }
               }, 3),
               std::runtime_error);
}

}  // namespace
}  // namespace rxnseq
