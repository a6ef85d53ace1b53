import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt


def plot_training_curve(history, output_file, title=None):
    """
    Save a figure of the local-model training curve.

    Parameters:
    ----------
    history : TrainHistory
        Objective and monitor EER per epoch (epoch 0 = identity)
    output_file : str
        Image path (format from the extension)
    title : str, optional
    """
    frame = history.to_frame()
    best = history.best_epoch()

    fig, (ax_eer, ax_obj) = plt.subplots(2, 1, figsize=(8, 7), sharex=True)
    ax_eer.plot(frame['epoch'], 100 * frame['monitor_eer'], 'b-o', markersize=4, label='Monitor EER')
    ax_eer.axvline(best, color='r', linestyle='--', label=f'Best epoch ({best})')
    ax_eer.set_ylabel('EER (%)')
    ax_eer.legend()
    ax_eer.grid(True)

    ax_obj.plot(frame['epoch'], frame['objective'], 'g-o', markersize=4)
    ax_obj.set_xlabel('Epoch')
    ax_obj.set_ylabel('Training log-likelihood')
    ax_obj.grid(True)

    fig.suptitle(title or 'Local model training')
    fig.savefig(output_file, dpi=150, bbox_inches='tight')
    plt.close(fig)


def plot_roc(roc, output_file, title=None):
    """Save a miss vs false-alarm figure from a roc_frame() DataFrame"""
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot(100 * roc['false_alarm'], 100 * roc['miss'], 'b-')
    ax.plot([0, 100], [0, 100], 'k:', linewidth=0.8)
    ax.set_xlabel('False alarm (%)')
    ax.set_ylabel('Miss (%)')
    ax.set_title(title or 'Miss vs false alarm')
    ax.grid(True)
    fig.savefig(output_file, dpi=150, bbox_inches='tight')
    plt.close(fig)
