from src.models.model_factory import create_scorer


def score_trialset(config, enroll_map, enroll_vectors, test_vectors, trials, verbose=False):
    '''
    Score a trial list through the full pipeline
    (center/LDA -> LN per mode -> projection -> NL score).

    Parameters:
    ------
    config: ScorerConfig
        Variant, LN mode and models
    enroll_map: EnrollMap
        enroll_id -> enrollment utterance ids
    enroll_vectors: VectorSet
        Raw vectors holding every enrollment utterance
    test_vectors: VectorSet
        Raw vectors holding every test utterance
    trials: TrialList
    verbose: bool
        Print a scoring summary

    Returns:
    -----
        list of ScoredTrial, one per trial in input order
    '''
    scorer = create_scorer(config)
    if verbose:
        print(f"Scoring {len(trials)} trials with {config.variant.value}, "
              f"length normalization: {config.ln_mode.value}")

    scorer.start_timer()
    prepared_enroll = scorer.prepare(enroll_vectors)
    prepared_test = scorer.prepare(test_vectors)
    needed = list(dict.fromkeys(t.enroll_id for t in trials if t.enroll_id in enroll_map))
    posteriors = scorer.enroll(enroll_map, prepared_enroll, needed)
    scored = scorer.score_trials(trials, posteriors, prepared_test)
    scorer.stop_timer()

    if verbose:
        scorer.print_summary()
    return scored
