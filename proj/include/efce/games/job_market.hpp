#pragma once

#include <optional>
#include <string>

#include "efce/game.hpp"

namespace efce::games {

// Two-player signaling game. The student decides to study or not, then
// answers an interview question; the employer hears only the answer and
// decides whether to hire. Defaults make the fully cooperative leaf pay
// (4, 5).
struct JobMarketSpec {
    double hire_benefit = 5.0;
    double study_cost = 1.0;
    double employer_good_hire = 5.0;
    double employer_bad_hire = -5.0;
};

class JobMarketGame final : public Game {
   public:
    // Information sets.
    static constexpr uint64_t kStudySet = 1;         // student: study / skip
    static constexpr uint64_t kAnswerAfterStudy = 2; // student: yes / no
    static constexpr uint64_t kAnswerAfterSkip = 3;  // student: yes / no
    static constexpr uint64_t kEmployerHeardYes = 4; // employer: hire / pass
    static constexpr uint64_t kEmployerHeardNo = 5;  // employer: hire / pass

    // Actions (1-based everywhere).
    static constexpr int kStudy = 1, kSkip = 2;
    static constexpr int kYes = 1, kNo = 2;
    static constexpr int kHire = 1, kPass = 2;

    explicit JobMarketGame(JobMarketSpec spec = {}) : spec_(spec) {}

    std::string name() const override { return "jobmarket"; }
    int num_players() const override { return 2; }

    GameType type() const override {
        // Five two-action information sets.
        const double spread_student = spec_.hire_benefit + spec_.study_cost;
        const double spread_employer = spec_.employer_good_hire - spec_.employer_bad_hire;
        return GameType{10.0, std::max(spread_student, spread_employer)};
    }

    std::optional<InfoSetId> info_set(const Node& h) const override {
        switch (h.hist.size()) {
            case 0: return InfoSetId{kStudySet};
            case 1: return InfoSetId{h.hist[0] == kStudy ? kAnswerAfterStudy : kAnswerAfterSkip};
            case 2: return InfoSetId{h.hist[1] == kYes ? kEmployerHeardYes : kEmployerHeardNo};
            default: return std::nullopt;
        }
    }

    PlayerId owner(InfoSetId i) const override {
        return PlayerId::regular(i.v >= kEmployerHeardYes ? 1 : 0);
    }

    int num_actions(InfoSetId) const override { return 2; }

    double nature_prob(InfoSetId, int) const override {
        throw MalformedGame("job market has no chance moves");
    }

    void utilities(const Node& leaf, UtilityVector& out) const override {
        const bool studied = leaf.hist[0] == kStudy;
        const bool hired = leaf.hist[2] == kHire;
        out.assign(2, 0.0);
        out[0] = (hired ? spec_.hire_benefit : 0.0) - (studied ? spec_.study_cost : 0.0);
        if (hired) out[1] = studied ? spec_.employer_good_hire : spec_.employer_bad_hire;
    }

    bool reachable(InfoSetId i_from, InfoSetId i_to) const override {
        // The study set precedes both answer sets; no other same-player pair
        // appears in order on any path.
        return i_from.v == kStudySet &&
               (i_to.v == kAnswerAfterStudy || i_to.v == kAnswerAfterSkip);
    }

    const JobMarketSpec& spec() const { return spec_; }

   private:
    JobMarketSpec spec_;
};

}  // namespace efce::games
