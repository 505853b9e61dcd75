"""Deterministic synthetic instance sets for pruner training tests.

Two corpora:

* ``separable_set``    - trivially separable labels (FP iff the target
                         mentions example.com); used to pin convergence and
                         determinism of the built-in trainer.
* ``pseudo_label_set`` - imitates teacher pseudo-labels for the four pruned
                         smell types: benign-username fallbacks, hackathon
                         comments, internal-network URLs, and disabled-cipher
                         lists are FP; real secrets, defect comments, public
                         plain-http downloads, and weak digests are TP.
"""

from __future__ import annotations

import random

from iacsmell.dataset import Instance, Label, instance_id
from iacsmell.ir import Technology
from iacsmell.rules import SmellType

_FILLER = [
    "# provisioning boilerplate",
    "service { 'app': ensure => running }",
    "$config_dir = '/etc/app'",
    "package { 'app': ensure => installed }",
    "# managed by the platform team",
    "$data_dir = '/var/lib/app'",
]


def _instance(
    target: str,
    smell: SmellType,
    technology: Technology,
    label: Label,
    index: int,
    rationale: str,
) -> Instance:
    above = [_FILLER[index % len(_FILLER)], _FILLER[(index + 1) % len(_FILLER)]]
    below = [_FILLER[(index + 2) % len(_FILLER)], _FILLER[(index + 3) % len(_FILLER)]]
    context = "\n".join(above + [target] + below)
    return Instance(
        id=instance_id(target, smell),
        technology=technology,
        file_path=f"synthetic/{smell.value.lower()}_{label.value.lower()}_{index}.txt",
        line=3,
        smell=smell,
        target=target,
        context=context,
        rationale=rationale,
        label=label,
    )


def separable_set(n_train: int = 36, n_val: int = 9, seed: int = 13) -> tuple[list[Instance], list[Instance]]:
    """FP iff the target contains example.com; linearly separable."""
    rng = random.Random(seed)
    hosts_fp = ["example.com", "www.example.com", "cdn.example.com"]
    hosts_tp = ["internal.lan", "files.corp", "mirror.net", "dl.vendor.io"]
    instances = []
    for i in range(n_train + n_val):
        fp = i % 2 == 0
        host = rng.choice(hosts_fp if fp else hosts_tp)
        target = f"url: http://{host}/pkg{i}.tar.gz"
        instances.append(
            _instance(
                target,
                SmellType.HTTP_WITHOUT_TLS,
                Technology.ANSIBLE,
                Label.FP if fp else Label.TP,
                i,
                "transfers over 'http://' without TLS",
            )
        )
    rng.shuffle(instances)
    return instances[:n_train], instances[n_train : n_train + n_val]


# (target template, technology) pools per family; {0} is the varying token
_HCS_FP = [
    ("$db_user = hiera('user', '{0}')", Technology.PUPPET),
    ("$service_user = lookup('service_user', '{0}')", Technology.PUPPET),
    ("svc_user: {0}", Technology.ANSIBLE),
    ("default['svc']['user'] = '{0}'", Technology.CHEF),
    ("run_as_user: {0}", Technology.ANSIBLE),
]
_HCS_FP_NAMES = ["postgres", "mysql", "nova", "glance", "cinder", "rabbit", "wwwdata", "deploy"]

# key/token/cert names whose value is a filesystem location, not a secret
_HCS_FP_PATHS = [
    ("$ssh_key_path = '/etc/ssh/keys/{0}.pub'", Technology.PUPPET),
    ("default['ops']['token_path'] = '/etc/opt/{0}'", Technology.CHEF),
    ("secret_file: /etc/vault/{0}.pem", Technology.ANSIBLE),
    ("$cert_dir = '/etc/pki/{0}'", Technology.PUPPET),
    ("client_key_file: /etc/tls/{0}.key", Technology.ANSIBLE),
]
_HCS_FP_PATH_WORDS = ["service", "agent", "deploy", "ingest", "primary", "backup"]

_HCS_TP = [
    ("$db_password = hiera('password', '{0}')", Technology.PUPPET),
    ("password: \"{0}\"", Technology.ANSIBLE),
    ("default['app']['password'] = '{0}'", Technology.CHEF),
    ("$api_token = '{0}'", Technology.PUPPET),
    ("artifact_password: \"{0}\"", Technology.ANSIBLE),
    ("default['ci']['token'] = '{0}'", Technology.CHEF),
]
_HCS_TP_SECRETS = [
    "S3cr3t!", "Hunter2!", "Pa55w0rd#", "t0k3n42x", "9f8e7d6c5b", "AbC123!x",
    "b7e2c9a44d1f", "deadbeef4242", "feedface99x", "8badf00dcafe",
]

# literal token assignments remain real smells even when the surrounding
# lines are benign account/path boilerplate
_HCS_TP_CONTEXTED = [
    (
        ["# integration credentials wiring", "$key_dir = '/etc/pki/service'"],
        "$api_token = '{0}'",
        ["user {{ 'svc':", "  ensure => present,"],
        Technology.PUPPET,
    ),
    (
        ["# integration credentials wiring", "default['ops']['conf_path'] = '/etc/opt/agent'"],
        "default['ops']['api_token'] = '{0}'",
        ["# rotate quarterly", "default['ops']['owner'] = 'svc'"],
        Technology.CHEF,
    ),
    (
        ["# service account material", "account_home: /home/svc"],
        "service_token: \"{0}\"",
        ["account_shell: /bin/bash", "# managed by the platform team"],
        Technology.ANSIBLE,
    ),
]

_SC_FP = [
    ("# HACK week prototype, see ticket OPS-{0}", Technology.PUPPET),
    ("# runs later than the {0} maintenance window", Technology.ANSIBLE),
    ("# workaround for bursty {0} queues, documented in the runbook", Technology.CHEF),
    ("# HACK day demo wiring for the {0} booth", Technology.PUPPET),
]
_SC_FP_WORDS = ["1024", "2048", "nightly", "weekly", "ingest", "upload"]

_SC_TP = [
    ("# TODO: temporary insecure {0} rule", Technology.PUPPET),
    ("# FIXME: drop {0} privileges before release", Technology.ANSIBLE),
    ("# TODO: remove hardcoded {0} listener", Technology.CHEF),
    ("# HACK: bypass {0} verification for now", Technology.ANSIBLE),
    ("# FIXME: {0} still speaks plain http", Technology.ANSIBLE),
    ("# TODO: the {0} listener has no TLS inside the cluster", Technology.CHEF),
]
_SC_TP_WORDS = ["firewall", "root", "debug", "admin", "tls", "signature"]

_HTTP_FP = [
    ("url: http://exporter.pod.cluster.local:9100/{0}", Technology.ANSIBLE),
    ("$upstream_url = 'http://builds.internal:8081/{0}'", Technology.PUPPET),
    ("default['proxy']['origin'] = 'http://cache.corp.lan/{0}'", Technology.CHEF),
    ("line: \"peer: http://node1.intranet:7001/{0}\"", Technology.ANSIBLE),
    ("default['web']['upstream'] = 'http://10.44.3.17:8080/{0}'", Technology.CHEF),
]
_HTTP_TP = [
    ("url=http://pkg.example.net/{0}.tar.gz dest=/tmp/{0}.tar.gz", Technology.ANSIBLE),
    ("command => '/usr/bin/curl -o /tmp/{0}.tgz http://mirror.example.org/{0}.tgz'", Technology.PUPPET),
    ("default['mirror']['pool'] = 'http://files.example.com/{0}'", Technology.CHEF),
    ("source 'http://dl.example.org/{0}.zip'", Technology.CHEF),
]
_HTTP_WORDS = ["web", "agent", "tools", "bundle", "runtime", "plugin"]

_WC_FP = [
    ("ssl_ciphers => 'HIGH:!aNULL:!RC4:!DES'", Technology.PUPPET),
    ("cipher_suite: \"ECDHE+AESGCM:!RC4:!DES\"", Technology.ANSIBLE),
    ("default['tls']['disabled'] = 'RC4 DES {0}'", Technology.CHEF),
]
_WC_TP = [
    ("checksum => 'md5'", Technology.PUPPET),
    ("$digest_algo = 'sha1'", Technology.PUPPET),
    ("command 'openssl dgst -md5 /opt/{0}.tar'", Technology.CHEF),
    ("checksum: md5:{0}9e8d7c", Technology.ANSIBLE),
    ("command: /usr/bin/verify --algo sha1 /tmp/{0}.bin", Technology.ANSIBLE),
]
_WC_WORDS = ["bundle", "agent", "tool", "image", "plugin", "sdk"]

_RATIONALES = {
    SmellType.HARD_CODED_SECRET: "sensitive name bound to a hard-coded literal",
    SmellType.SUSPICIOUS_COMMENT: "comment contains a suspicious word",
    SmellType.HTTP_WITHOUT_TLS: "transfers over 'http://' without TLS",
    SmellType.WEAK_CRYPTO: "uses a weak cryptographic algorithm",
}


def _family(templates, words, smell, label, start_index):
    out = []
    i = start_index
    for template, tech in templates:
        for word in words:
            target = template.format(word)
            out.append(_instance(target, smell, tech, label, i, _RATIONALES[smell]))
            i += 1
    return out


def _contexted_family(templates, words, smell, label, start_index):
    out = []
    i = start_index
    for above, template, below, tech in templates:
        for word in words:
            target = template.format(word)
            context = "\n".join(above + [target] + below)
            out.append(
        Instance(
                    id=instance_id(target, smell),
                    technology=tech,
                    file_path=f"synthetic/{smell.value.lower()}_{label.value.lower()}_{i}.txt",
                    line=3,
                    smell=smell,
                    target=target,
                    context=context,
                    rationale=_RATIONALES[smell],
                    label=label,
                )
            )
            i += 1
    return out


def pseudo_label_set(seed: int = 7) -> tuple[list[Instance], list[Instance]]:
    """Teacher-style labels over the four pruned smell families.

    Returns a deterministic (train, val) pair; roughly 8:1 with both labels
    present in each split.
    """
    pool = []
    pool += _family(_HCS_FP, _HCS_FP_NAMES, SmellType.HARD_CODED_SECRET, Label.FP, 0)
    pool += _family(_HCS_FP_PATHS, _HCS_FP_PATH_WORDS, SmellType.HARD_CODED_SECRET, Label.FP, 50)
    pool += _family(_HCS_TP, _HCS_TP_SECRETS, SmellType.HARD_CODED_SECRET, Label.TP, 100)
    pool += _contexted_family(
        _HCS_TP_CONTEXTED, _HCS_TP_SECRETS, SmellType.HARD_CODED_SECRET, Label.TP, 150
    )
    pool += _family(_SC_FP, _SC_FP_WORDS, SmellType.SUSPICIOUS_COMMENT, Label.FP, 200)
    pool += _family(_SC_TP, _SC_TP_WORDS, SmellType.SUSPICIOUS_COMMENT, Label.TP, 300)
    pool += _family(_HTTP_FP, _HTTP_WORDS, SmellType.HTTP_WITHOUT_TLS, Label.FP, 400)
    pool += _family(_HTTP_TP, _HTTP_WORDS, SmellType.HTTP_WITHOUT_TLS, Label.TP, 500)
    pool += _family(_WC_FP, _WC_WORDS, SmellType.WEAK_CRYPTO, Label.FP, 600)
    pool += _family(_WC_TP, _WC_WORDS, SmellType.WEAK_CRYPTO, Label.TP, 700)
    rng = random.Random(seed)
    rng.shuffle(pool)
    n_val = len(pool) // 9
    return pool[n_val:], pool[:n_val]
