#!/usr/bin/env python3
"""Generate the bundled case-archive fixture under fixtures/medpix/.

The fixture is a static snapshot of a paginated case API: two index pages,
twelve cases, six shared topic pages, per-case question files, and nine PNG
files (eight distinct images plus one byte-identical duplicate to exercise
content-addressed dedup). Everything is deterministic; run it only to
regenerate the committed files after changing the tables below.

Usage: python3 scripts/make_medpix_fixture.py [--check]
  --check  regenerate into a temp dir and verify the expected shape counts
           by importing through the real pipeline
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from PIL import Image, ImageDraw

REPO = Path(__file__).resolve().parent.parent
OUT = REPO / "fixtures" / "medpix"

AUTHORS = [
    {"Name": "L. Moreau", "Affiliation": "St. Vincent Imaging Institute",
     "Email": "lmoreau@svii.example.org"},
    {"Name": "K. Adeyemi", "Affiliation": "Riverside University Hospital",
     "Email": "kadeyemi@ruh.example.org"},
    {"Name": "T. Okafor", "Affiliation": "Northgate Medical Center"},
    {"Name": "R. Lindqvist", "Affiliation": "Kronberg Clinic",
     "Email": "rlindqvist@kronberg.example.org"},
]

TECHNICAL = {
    "StationName": "SCANNER-{n:02d}",
    "Manufacturer": "Orthia Medical",
    "ModelName": "Orthia V{n}",
    "KVP": 120,
    "ExposureTime": "{n}40 ms",
    "TubeCurrent": "2{n}0 mA",
    "SliceThickness": "3.0 mm",
    "PixelSpacing": "0.45\\0.45",
    "Rows": 512,
    "Columns": 512,
    "WindowCenter": 40,
    "WindowWidth": 400,
    "RepetitionTime": "5{n}0 ms",
    "EchoTime": "1{n} ms",
    "MagneticField": "1.5 T",
    "Contrast": "IV iodinated",
    "BodyPart": "{body}",
    "PatientPosition": "HFS",
    "SoftwareVersion": "ovs-4.{n}",
    "AcquisitionDate": "2023-0{m}-1{n}",
}


def technical(n: int, body: str) -> dict:
    out = {}
    for key, value in TECHNICAL.items():
        if isinstance(value, str):
            out[key] = value.format(n=n % 9 + 1, m=n % 8 + 1, body=body)
        else:
            out[key] = value
    return out


def image(file_n: int, caption: str, modality: str, plane: str, body: str, k: int) -> dict:
    return {
        "Caption": caption,
        "File": f"images/img-{file_n:02d}.png",
        "Modality": modality,
        "Plane": plane,
        "Technical": technical(k, body),
    }


CASES = [
    {
        "Id": "case-001",
        "Title": "Ring-enhancing mass of the left frontal lobe",
        "SourceId": "MPX-58231",
        "CreatedDate": "2023-02-11",
        "ModifiedDate": "2023-05-02",
        "Author": AUTHORS[0],
        "Sex": "F",
        "Age": 62,
        "Ethnicity": "Hispanic",
        "Occupation": "Schoolteacher",
        "History": "Progressive morning headaches and word-finding difficulty "
                   "over three weeks; one witnessed focal seizure.",
        "Exam": "Mild expressive aphasia; right pronator drift; papilledema on "
                "fundoscopy.",
        "Findings": "Irregular ring-enhancing mass in the left frontal lobe with "
                    "marked surrounding vasogenic edema and 6 mm midline shift.",
        "Diagnosis": {
            "Primary": "Glioblastoma, IDH-wildtype",
            "Differential": "Metastasis; cerebral abscess; tumefactive "
                            "demyelination",
            "Confirmation": "Stereotactic biopsy with histopathology",
        },
        "ACRCode": "13.366",
        "Treatment": "Maximal safe resection followed by chemoradiation.",
        "Discussion": "Necrotic core with an irregular enhancing rim in an older "
                      "adult favors high-grade glioma; perfusion imaging helps "
                      "separate tumor from abscess.",
        "TopicRefs": ["topic-01", "topic-02"],
        "ImageList": [
            image(1, "Axial T1 post-contrast at the level of the lateral "
                     "ventricles", "MR", "Axial", "HEAD", 1),
            image(2, "Axial FLAIR showing peritumoral edema", "MR", "Axial",
                  "HEAD", 2),
        ],
        "Keywords": ["glioma", "ring enhancement", "brain mass"],
        "References": ["Harwood Neuroimaging Atlas, 4th ed., ch. 12",
                       "Imaging of intra-axial masses, Clin Radiol Rev 2019"],
        "Rights": {"License": "CC-BY-NC 4.0",
                   "CopyrightHolder": "St. Vincent Imaging Institute"},
        "Workflow": {"Status": "published", "ReviewedBy": "editorial-board",
                     "ReviewDate": "2023-04-28"},
        "Stats": {"Views": 18422, "Downloads": 512},
        "InternalNotes": "Flagged as teaching-file exemplar at 2023 review.",
        "LegacyId": "TF-1998-0471",
        "UploadBatch": "batch-2023-02",
        "ProtocolDoc": "https://archive.example.org/protocols/brain-tumor-mri.pdf",
    },
    {
        "Id": "case-002",
        "Title": "Sudden pleuritic chest pain after long-haul flight",
        "SourceId": "MPX-58410",
        "CreatedDate": "2023-02-19",
        "ModifiedDate": "2023-03-12",
        "Author": AUTHORS[1],
        "Sex": "M",
        "Age": 47,
        "Ethnicity": "White",
        "History": "Acute dyspnea and pleuritic pain eleven hours after a "
                   "fourteen-hour flight; calf tenderness on the left.",
        "Exam": "Tachycardia 118, SpO2 89% on room air, clear lung fields.",
        "Findings": "Central filling defect straddling the bifurcation of the "
                    "right and left pulmonary arteries; RV/LV ratio 1.4.",
        "Diagnosis": {
            "Differential": "Acute coronary syndrome; aortic dissection",
            "Confirmation": "CT pulmonary angiography",
        },
        "Dx": "Saddle pulmonary embolism",
        "ACRCode": "60.721",
        "Treatment": "Weight-based anticoagulation; catheter-directed "
                     "thrombolysis considered for RV strain.",
        "DiseaseDiscussion": "A saddle embolus is a radiologic emergency; right "
                             "heart strain signs on CT change management more "
                             "than clot location alone.",
        "TopicRefs": ["topic-03"],
        "ImageList": [
            image(3, "CTPA, axial, filling defect at the pulmonary bifurcation",
                  "CT", "Axial", "CHEST", 3),
        ],
        "Keywords": ["pulmonary embolism", "CTPA", "saddle embolus", "RV strain"],
        "References": ["Vascular emergencies on CT, Emerg Imaging Q 2021"],
        "Rights": {"License": "CC-BY 4.0",
                   "CopyrightHolder": "Riverside University Hospital"},
        "Workflow": {"Status": "published", "ReviewedBy": "cv-panel",
                     "ReviewDate": "2023-03-10"},
        "Stats": {"Views": 9911, "Downloads": 230},
        "LegacyId": "TF-2003-1180",
        "UploadBatch": "batch-2023-02",
        "ProtocolDoc": "https://archive.example.org/protocols/ctpa.pdf",
    },
    {
        "Id": "case-003",
        "Title": "Right lower quadrant pain with fever in a young adult",
        "SourceId": "MPX-58577",
        "CreatedDate": "2023-03-03",
        "ModifiedDate": "2023-03-20",
        "Author": AUTHORS[2],
        "Sex": "F",
        "Age": 24,
        "Occupation": "Graduate student",
        "History": "Periumbilical pain migrating to the right lower quadrant "
                   "over one day, anorexia, low-grade fever.",
        "Exam": "McBurney point tenderness with guarding; WBC 14.2.",
        "Findings": "Blind-ending tubular structure measuring 11 mm with mural "
                    "hyperenhancement, periappendiceal fat stranding, and a "
                    "3 mm appendicolith.",
        "Diagnosis": {
            "Primary": "Acute uncomplicated appendicitis",
            "Differential": "Mesenteric adenitis; right-sided diverticulitis; "
                            "ovarian torsion",
            "Confirmation": "Operative pathology",
        },
        "ACRCode": "75.210",
        "Treatment": "Laparoscopic appendectomy within 24 hours.",
        "Discussion": "An enlarged appendix with stranding and an appendicolith "
                      "is specific; unenhanced MRI serves pregnant patients.",
        "TopicRefs": ["topic-04"],
        "ImageList": [
            image(4, "Contrast CT, axial, dilated appendix with stranding",
                  "CT", "Axial", "ABDOMEN", 4),
        ],
        "Keywords": ["appendicitis", "acute abdomen"],
        "References": ["Right lower quadrant pain pathways, Abdom Imaging "
                       "Handbook 2020"],
        "Rights": {"License": "CC-BY-NC 4.0",
                   "CopyrightHolder": "Northgate Medical Center"},
        "Workflow": {"Status": "published", "ReviewedBy": "gi-panel",
                     "ReviewDate": "2023-03-18"},
        "Stats": {"Views": 15230, "Downloads": 488},
        "InternalNotes": "Candidate for the undergraduate acute-abdomen module.",
        "UploadBatch": "batch-2023-03",
        "ProtocolDoc": "https://archive.example.org/protocols/abdominal-ct.pdf",
    },
    {
        "Id": "case-004",
        "Title": "Incidental extra-axial mass in a patient with tinnitus",
        "SourceId": "MPX-58691",
        "CreatedDate": "2023-03-15",
        "ModifiedDate": "2023-06-01",
        "Author": AUTHORS[3],
        "Sex": "F",
        "Age": 58,
        "Ethnicity": "Black",
        "Occupation": "Accountant",
        "History": "Workup of pulsatile tinnitus; no focal deficits reported.",
        "Exam": "Neurologic examination unremarkable.",
        "Findings": "Dural-based, homogeneously enhancing extra-axial mass over "
                    "the right convexity with an enhancing dural tail and "
                    "calvarial hyperostosis.",
        "Diagnosis": {
            "Primary": "Parasagittal meningioma, WHO grade 1",
            "Differential": "Dural metastasis; solitary fibrous tumor",
            "Confirmation": "Serial imaging stability over 24 months",
        },
        "ACRCode": "13.301",
        "Treatment": "Surveillance MRI; resection reserved for growth or edema.",
        "Discussion": "The dural tail and hyperostosis point strongly to "
                      "meningioma; most small convexity lesions are watched.",
        "TopicRefs": ["topic-01"],
        "ImageList": [
            image(1, "Axial T1 post-contrast, dural-based enhancing mass",
                  "MR", "Axial", "HEAD", 5),
            image(5, "Coronal T1 post-contrast with dural tail", "MR",
                  "Coronal", "HEAD", 6),
        ],
        "Keywords": ["meningioma", "extra-axial", "dural tail"],
        "References": ["Extra-axial masses: a pattern approach, Neuroradiol "
                       "Notes 2018", "Meningioma growth kinetics, J Neurooncol "
                       "Imaging 2022"],
        "Rights": {"License": "CC-BY 4.0", "CopyrightHolder": "Kronberg Clinic"},
        "Workflow": {"Status": "published", "ReviewedBy": "editorial-board",
                     "ReviewDate": "2023-05-30"},
        "Stats": {"Views": 7212, "Downloads": 164},
        "LegacyId": "TF-2001-0064",
        "UploadBatch": "batch-2023-03",
        "ProtocolDoc": "https://archive.example.org/protocols/brain-tumor-mri.pdf",
    },
    {
        "Id": "case-005",
        "Title": "Acute dyspnea in a tall young smoker",
        "SourceId": "MPX-58722",
        "CreatedDate": "2023-03-21",
        "ModifiedDate": "2023-04-02",
        "Author": AUTHORS[0],
        "Sex": "M",
        "Age": 21,
        "History": "Sudden right-sided chest pain while at rest; lifelong "
                   "asthenic build; half-pack-per-day smoker.",
        "Exam": "Absent breath sounds and hyperresonance over the right apex.",
        "Findings": "Visceral pleural line at the right apex with absent "
                    "peripheral lung markings; no mediastinal shift.",
        "Diagnosis": {
            "Primary": "Primary spontaneous pneumothorax",
            "Differential": "Giant bulla; skin-fold artifact",
            "Confirmation": "Expiratory radiograph",
        },
        "ACRCode": "60.150",
        "Treatment": "Needle aspiration; smoking cessation counseling.",
        "Discussion": "A visible pleural line distinguishes pneumothorax from a "
                      "bulla; expiratory films accentuate small apical "
                      "collections.",
        "TopicRefs": ["topic-05"],
        "ImageList": [
            image(6, "Upright PA radiograph, right apical pleural line",
                  "XR", "PA", "CHEST", 7),
        ],
        "Keywords": ["pneumothorax", "pleural line", "chest radiograph"],
        "References": ["Pleural disease primer, Thoracic Imaging Rounds 2017"],
        "Rights": {"License": "CC-BY-NC 4.0",
                   "CopyrightHolder": "St. Vincent Imaging Institute"},
        "Workflow": {"Status": "published", "ReviewedBy": "chest-panel",
                     "ReviewDate": "2023-04-01"},
        "Stats": {"Views": 20881, "Downloads": 731},
        "InternalNotes": "High view count; keep image quality at 600 dpi scan.",
        "LegacyId": "TF-1995-0212",
        "UploadBatch": "batch-2023-03",
        "ProtocolDoc": "https://archive.example.org/protocols/chest-xr.pdf",
    },
    {
        "Id": "case-006",
        "Title": "Painless hematuria with an enhancing renal mass",
        "SourceId": "MPX-58830",
        "CreatedDate": "2023-04-02",
        "ModifiedDate": "2023-04-29",
        "Author": AUTHORS[1],
        "Sex": "M",
        "Age": 66,
        "Ethnicity": "White",
        "Occupation": "Retired electrician",
        "History": "Two episodes of painless gross hematuria; 30 pack-year "
                   "smoking history; no flank pain.",
        "Exam": "Abdomen soft; no palpable flank mass; blood pressure 148/92.",
        "Findings": "4.8 cm heterogeneously enhancing mass arising from the "
                    "left renal cortex with central necrosis; no venous "
                    "extension.",
        "Diagnosis": {
            "Differential": "Oncocytoma; fat-poor angiomyolipoma",
            "Confirmation": "Partial nephrectomy pathology",
        },
        "Dx": "Clear cell renal cell carcinoma",
        "ACRCode": "81.361",
        "Treatment": "Robotic partial nephrectomy; surveillance per risk group.",
        "DiseaseDiscussion": "Enhancement above 20 HU in a solid renal mass is "
                             "suspicious; corticomedullary phase can hide small "
                             "lesions, so nephrographic timing matters.",
        "TopicRefs": ["topic-06"],
        "ImageList": [
            image(7, "Nephrographic-phase CT, axial, enhancing left renal mass",
                  "CT", "Axial", "ABDOMEN", 8),
        ],
        "Keywords": ["renal mass", "hematuria", "RCC", "nephrectomy"],
        "References": ["Solid renal masses on multiphase CT, Uroradiology "
                       "Casebook 2020"],
        "Rights": {"License": "CC-BY 4.0",
                   "CopyrightHolder": "Riverside University Hospital"},
        "Workflow": {"Status": "published", "ReviewedBy": "gu-panel",
                     "ReviewDate": "2023-04-27"},
        "Stats": {"Views": 6120, "Downloads": 140},
        "LegacyId": "TF-2008-0903",
        "UploadBatch": "batch-2023-04",
        "ProtocolDoc": "https://archive.example.org/protocols/renal-mass-ct.pdf",
    },
    {
        "Id": "case-007",
        "Title": "Fever and headache two weeks after dental work",
        "SourceId": "MPX-58914",
        "CreatedDate": "2023-04-11",
        "ModifiedDate": "2023-05-16",
        "Author": AUTHORS[2],
        "Sex": "M",
        "Age": 39,
        "Ethnicity": "South Asian",
        "History": "Fourteen days of fever, worsening headache, and one episode "
                    "of vomiting following a molar extraction.",
        "Exam": "Temperature 38.6 C; mild neck stiffness; no focal deficit.",
        "Findings": "Thin, smooth, uniformly enhancing rim around a "
                    "centrally restricting collection in the right parietal "
                    "lobe; rim is T2-hypointense.",
        "Diagnosis": {
            "Primary": "Pyogenic cerebral abscess",
            "Differential": "Glioblastoma; metastasis; subacute infarct",
            "Confirmation": "Stereotactic aspiration and culture",
        },
        "ACRCode": "13.205",
        "Treatment": "Aspiration plus six weeks of targeted antibiotics.",
        "Discussion": "Central diffusion restriction inside a smooth thin rim "
                      "separates abscess from necrotic tumor in most cases; "
                      "the dual rim sign adds confidence.",
        "TopicRefs": ["topic-01", "topic-02"],
        "ImageList": [
            image(9, "Axial T1 post-contrast, smooth thin enhancing rim",
                  "MR", "Axial", "HEAD", 9),
            image(8, "DWI, axial, central diffusion restriction", "MR",
                  "Axial", "HEAD", 10),
        ],
        "Keywords": ["abscess", "ring enhancement", "diffusion restriction"],
        "References": ["Rim and restriction: infection versus tumor, "
                       "Neuroimaging Clin Lett 2019"],
        "Rights": {"License": "CC-BY-NC 4.0",
                   "CopyrightHolder": "Northgate Medical Center"},
        "Workflow": {"Status": "published", "ReviewedBy": "editorial-board",
                     "ReviewDate": "2023-05-12"},
        "Stats": {"Views": 12704, "Downloads": 402},
        "InternalNotes": "Pairs well with case-001 for compare-and-contrast.",
        "UploadBatch": "batch-2023-04",
        "ProtocolDoc": "https://archive.example.org/protocols/brain-tumor-mri.pdf",
    },
    {
        "Id": "case-008",
        "Title": "Tearing interscapular pain with pulse asymmetry",
        "SourceId": "MPX-59004",
        "CreatedDate": "2023-04-25",
        "ModifiedDate": "2023-05-08",
        "Author": AUTHORS[3],
        "Sex": "M",
        "Age": 71,
        "Ethnicity": "White",
        "Occupation": "Orchard manager",
        "History": "Abrupt tearing pain radiating to the back; long-standing, "
                   "poorly controlled hypertension.",
        "Exam": "Right arm BP 196/104, left arm 148/86; early diastolic murmur.",
        "Findings": "Intimal flap extending from the aortic root past the left "
                    "subclavian origin; true lumen compressed; pericardial "
                    "effusion absent.",
        "Diagnosis": {
            "Primary": "Stanford type A aortic dissection",
            "Differential": "Intramural hematoma; penetrating ulcer",
            "Confirmation": "Intraoperative findings",
        },
        "ACRCode": "56.430",
        "Treatment": "Emergency ascending aortic repair.",
        "Discussion": "Flap extent relative to the arch vessels drives triage; "
                      "ECG-gated acquisition removes motion artifact at the "
                      "root.",
        "TopicRefs": ["topic-03"],
        "ImageList": [
            image(3, "CTA, axial, intimal flap in the ascending aorta",
                  "CT", "Axial", "CHEST", 11),
        ],
        "Keywords": ["aortic dissection", "intimal flap", "CTA"],
        "References": ["Acute aortic syndromes, Emerg Imaging Q 2021",
                       "Gated CTA of the thoracic aorta, CV Imaging Methods "
                       "2020"],
        "Rights": {"License": "CC-BY 4.0", "CopyrightHolder": "Kronberg Clinic"},
        "Workflow": {"Status": "published", "ReviewedBy": "cv-panel",
                     "ReviewDate": "2023-05-06"},
        "Stats": {"Views": 9444, "Downloads": 305},
        "InternalNotes": "Swap in gated series if source hospital re-exports.",
        "LegacyId": "TF-2011-0342",
        "UploadBatch": "batch-2023-04",
        "ProtocolDoc": "https://archive.example.org/protocols/ct-aorta.pdf",
    },
    {
        "Id": "case-009",
        "Title": "Adnexal mass with macroscopic fat in a young woman",
        "SourceId": "MPX-59122",
        "CreatedDate": "2023-05-07",
        "ModifiedDate": "2023-05-30",
        "Author": AUTHORS[0],
        "Sex": "F",
        "Age": 28,
        "Ethnicity": "East Asian",
        "Occupation": "Pharmacist",
        "History": "Intermittent right pelvic discomfort for four months; "
                   "found on ultrasound referred for characterization.",
        "Exam": "Mobile, non-tender right adnexal fullness.",
        "Findings": "7 cm right adnexal mass containing macroscopic fat, "
                    "calcification, and a Rokitansky nodule.",
        "Diagnosis": {
            "Primary": "Mature cystic teratoma of the ovary",
            "Differential": "Immature teratoma; endometrioma",
            "Confirmation": "Cystectomy pathology",
        },
        "ACRCode": "85.144",
        "Treatment": "Laparoscopic ovarian-sparing cystectomy.",
        "Discussion": "Macroscopic fat in an adnexal lesion is nearly "
                      "pathognomonic; torsion risk rises with size beyond "
                      "5 cm.",
        "TopicRefs": ["topic-04", "topic-06"],
        "ImageList": [
            image(2, "CT pelvis, axial, fat-density adnexal mass with mural "
                     "nodule", "CT", "Axial", "PELVIS", 12),
        ],
        "Keywords": ["teratoma", "adnexal mass", "macroscopic fat"],
        "References": ["Adnexal masses with fat, Pelvic Imaging Digest 2018"],
        "Rights": {"License": "CC-BY-NC 4.0",
                   "CopyrightHolder": "St. Vincent Imaging Institute"},
        "Workflow": {"Status": "published", "ReviewedBy": "gu-panel",
                     "ReviewDate": "2023-05-28"},
        "Stats": {"Views": 5233, "Downloads": 98},
        "LegacyId": "TF-2015-0777",
        "UploadBatch": "batch-2023-05",
        "ProtocolDoc": "https://archive.example.org/protocols/pelvic-ct.pdf",
    },
    {
        "Id": "case-010",
        "Title": "Hypotension and absent breath sounds after a fall",
        "SourceId": "MPX-59208",
        "CreatedDate": "2023-05-18",
        "ModifiedDate": "2023-06-04",
        "Author": AUTHORS[1],
        "Sex": "M",
        "Age": 54,
        "History": "Ladder fall onto the left side; escalating respiratory "
                   "distress during transport.",
        "Exam": "BP 82/50, trachea deviated right, distended neck veins, "
                "silent left hemithorax.",
        "Findings": "Left lung collapse with mediastinal shift to the right, "
                    "depressed left hemidiaphragm, and widened left "
                    "intercostal spaces.",
        "Diagnosis": {
            "Differential": "Massive hemothorax; main bronchus rupture",
            "Confirmation": "Immediate decompression response",
        },
        "Dx": "Tension pneumothorax",
        "ACRCode": "60.151",
        "Treatment": "Needle decompression followed by tube thoracostomy.",
        "DiseaseDiscussion": "Tension physiology is a clinical diagnosis; when "
                             "a film exists, contralateral shift plus a "
                             "depressed diaphragm demand immediate "
                             "decompression before any further imaging.",
        "TopicRefs": ["topic-05"],
        "ImageList": [
            image(6, "Supine AP radiograph, leftward collapse with shift",
                  "XR", "AP", "CHEST", 13),
        ],
        "Keywords": ["tension pneumothorax", "trauma", "mediastinal shift"],
        "References": ["Chest trauma essentials, Thoracic Imaging Rounds 2017"],
        "Rights": {"License": "CC-BY 4.0",
                   "CopyrightHolder": "Riverside University Hospital"},
        "Workflow": {"Status": "published", "ReviewedBy": "chest-panel",
                     "ReviewDate": "2023-06-02"},
        "Stats": {"Views": 16099, "Downloads": 587},
        "UploadBatch": "batch-2023-05",
        "ProtocolDoc": "https://archive.example.org/protocols/chest-xr.pdf",
    },
    {
        "Id": "case-011",
        "Title": "Relapsing neurologic deficits in a young adult",
        "SourceId": "MPX-59311",
        "CreatedDate": "2023-05-29",
        "ModifiedDate": "2023-06-20",
        "Author": AUTHORS[2],
        "Sex": "F",
        "Age": 31,
        "Ethnicity": "White",
        "Occupation": "Software engineer",
        "History": "Right optic neuritis two years ago; now subacute left leg "
                   "numbness ascending over days.",
        "Exam": "Relative afferent pupillary defect on the right; reduced "
                "vibration sense in the left leg.",
        "Findings": "Multiple ovoid periventricular and juxtacortical T2 "
                    "lesions oriented perpendicular to the ventricles, one "
                    "enhancing; short-segment dorsal cord lesion at T4.",
        "Diagnosis": {
            "Primary": "Relapsing-remitting multiple sclerosis",
            "Differential": "Neuromyelitis optica spectrum; small vessel "
                            "disease",
            "Confirmation": "Dissemination in space and time on MRI with "
                            "supportive CSF oligoclonal bands",
        },
        "ACRCode": "13.811",
        "Treatment": "High-efficacy disease-modifying therapy initiated.",
        "Discussion": "Perpendicular ovoid lesions with a single enhancing "
                      "focus satisfy dissemination criteria in one scan when "
                      "CSF is supportive.",
        "TopicRefs": ["topic-01"],
        "ImageList": [
            image(5, "Sagittal FLAIR, perpendicular periventricular lesions",
                  "MR", "Sagittal", "HEAD", 14),
            image(7, "Sagittal T2, short-segment dorsal cord lesion", "MR",
                  "Sagittal", "SPINE", 15),
        ],
        "Keywords": ["demyelination", "MS", "periventricular lesions"],
        "References": ["Demyelinating disease imaging criteria, Neuroradiol "
                       "Notes 2018"],
        "Rights": {"License": "CC-BY-NC 4.0",
                   "CopyrightHolder": "Northgate Medical Center"},
        "Workflow": {"Status": "published", "ReviewedBy": "editorial-board",
                     "ReviewDate": "2023-06-18"},
        "Stats": {"Views": 8744, "Downloads": 266},
        "InternalNotes": "Awaiting consent to add the follow-up enhancing scan.",
        "LegacyId": "TF-2019-0150",
        "UploadBatch": "batch-2023-05",
        "ProtocolDoc": "https://archive.example.org/protocols/ms-mri.pdf",
    },
    {
        "Id": "case-012",
        "Title": "Palpable abdominal mass in a three-year-old",
        "SourceId": "MPX-59402",
        "CreatedDate": "2023-06-08",
        "ModifiedDate": "2023-06-30",
        "Author": AUTHORS[3],
        "Sex": "M",
        "Age": 3,
        "History": "Parent felt a firm left-sided mass at bath time; child "
                   "otherwise well, no hematuria reported.",
        "Exam": "Non-tender, smooth left flank mass not crossing the midline.",
        "Findings": "Large well-circumscribed left renal mass with a claw of "
                    "stretched renal parenchyma; displaces but does not "
                    "encase the aorta.",
        "Diagnosis": {
            "Primary": "Wilms tumor (nephroblastoma)",
            "Differential": "Neuroblastoma; mesoblastic nephroma",
            "Confirmation": "Nephrectomy histopathology",
        },
        "ACRCode": "81.312",
        "Treatment": "Radical nephrectomy with stage-directed chemotherapy.",
        "Discussion": "The claw sign marks renal origin; neuroblastoma tends "
                      "to encase vessels rather than displace them.",
        "TopicRefs": ["topic-06", "topic-04"],
        "ImageList": [
            image(8, "Contrast CT, coronal, renal mass with claw sign",
                  "CT", "Coronal", "ABDOMEN", 16),
        ],
        "Keywords": ["Wilms tumor", "pediatric mass", "claw sign"],
        "References": ["Pediatric renal masses, Peds Imaging Casebook 2019",
                       "Claw sign revisited, Abdom Imaging Handbook 2020"],
        "Rights": {"License": "CC-BY 4.0", "CopyrightHolder": "Kronberg Clinic"},
        "Workflow": {"Status": "published", "ReviewedBy": "peds-panel",
                     "ReviewDate": "2023-06-28"},
        "Stats": {"Views": 11077, "Downloads": 359},
        "LegacyId": "TF-2006-0521",
        "UploadBatch": "batch-2023-06",
        "ProtocolDoc": "https://archive.example.org/protocols/peds-abdomen-ct.pdf",
    },
]

TOPICS = [
    {
        "Id": "topic-01",
        "Title": "Intracranial Mass Lesions",
        "Category": "Neuroradiology",
        "Overview": "A framework for intra-axial versus extra-axial masses: "
                    "location first, then enhancement pattern, then diffusion "
                    "and perfusion behavior.",
        "Discussion": "Age and immune status reshape the differential more "
                      "than any single imaging sign; always pair morphology "
                      "with the clinical tempo.",
        "Etiology": "Primary glial tumors, meningeal tumors, metastases, "
                    "infection, and demyelination dominate adult practice.",
        "Epidemiology": "Metastases outnumber primary brain tumors in adults "
                        "beyond middle age.",
        "Findings": "Key discriminators: dural tail, central restriction, "
                    "perfusion within the enhancing rim, and lesion "
                    "orientation relative to the ventricles.",
        "TreatmentOptions": "Ranges from surveillance through resection, "
                            "radiosurgery, and systemic therapy by histology.",
        "Prognosis": "Grade, genetics, and resectability determine outcome "
                     "far more than lesion size.",
        "CaseRefs": ["case-001", "case-004", "case-007", "case-011"],
        "Contributor": "L. Moreau",
        "LastRevision": "2023-06-21",
    },
    {
        "Id": "topic-02",
        "Title": "Ring-Enhancing Lesions",
        "Category": "Neuroradiology",
        "Overview": "The classic short differential: abscess, high-grade "
                    "glioma, metastasis, demyelination, resolving hematoma.",
        "Discussion": "Rim character carries the signal: smooth and thin "
                      "favors abscess, shaggy and nodular favors necrotic "
                      "tumor.",
        "Epidemiology": "Abscess incidence tracks dental, sinus, and cardiac "
                        "sources; tumors dominate in older cohorts.",
        "Findings": "Diffusion inside the cavity is the single most useful "
                    "sequence; add perfusion of the rim when equivocal.",
        "CaseRefs": ["case-001", "case-007"],
        "Contributor": "T. Okafor",
        "LastRevision": "2023-05-19",
    },
    {
        "Id": "topic-03",
        "Title": "Acute Thoracic Vascular Emergencies",
        "Category": "Cardiovascular",
        "Overview": "CT angiography triage of pulmonary embolism and acute "
                    "aortic syndromes in the emergency department.",
        "Discussion": "Scan timing is everything: PE studies opacify the "
                      "pulmonary arteries, dissection studies the systemic "
                      "aorta; a combined protocol compromises both.",
        "Etiology": "Venous thromboembolism versus hypertensive media "
                    "degeneration; both share smoking as an amplifier.",
        "Findings": "Filling defects, flap morphology, false-lumen signs, and "
                    "right-heart strain markers.",
        "TreatmentOptions": "Anticoagulation, thrombolysis, endovascular "
                            "repair, or open surgery by anatomy and "
                            "stability.",
        "CaseRefs": ["case-002", "case-008"],
        "Contributor": "K. Adeyemi",
        "LastRevision": "2023-05-11",
    },
    {
        "Id": "topic-04",
        "Title": "Acute Abdomen Imaging",
        "Category": "Abdominal",
        "Overview": "Pattern recognition for the surgical abdomen: "
                    "inflammation, obstruction, ischemia, and mass-related "
                    "pain.",
        "Discussion": "Fat stranding is the radiologist's friend: it marks "
                      "the epicenter of disease before organ changes are "
                      "obvious.",
        "Etiology": "Appendicitis, diverticulitis, cholecystitis, and "
                    "gynecologic emergencies head the list by age group.",
        "Epidemiology": "Appendicitis peaks in the second and third decades; "
                        "diverticulitis climbs steadily after the fifth.",
        "Findings": "Wall thickening with hyperenhancement, adjacent "
                    "stranding, obstructing calculi, and free fluid or gas.",
        "Prognosis": "Outcomes hinge on time to intervention once "
                     "perforation risk is declared.",
        "CaseRefs": ["case-003", "case-009", "case-012"],
        "Contributor": "T. Okafor",
        "LastRevision": "2023-06-02",
    },
    {
        "Id": "topic-05",
        "Title": "Pleural Air and Effusions",
        "Category": "Thoracic",
        "Overview": "Recognizing pleural air on upright, supine, and "
                    "ultrasound studies, and grading its urgency.",
        "Discussion": "Supine films hide apical air; look for the deep sulcus "
                      "and a sharp cardiac border instead.",
        "Epidemiology": "Spontaneous pneumothorax favors tall young men; "
                        "iatrogenic causes rise with procedure volume.",
        "Findings": "Visceral pleural line without peripheral markings; "
                    "contralateral shift flags tension physiology.",
        "TreatmentOptions": "Observation, aspiration, chest tube, or pleurodesis "
                            "by size and recurrence.",
        "Prognosis": "Recurrence approaches one in three after a first "
                     "spontaneous episode.",
        "CaseRefs": ["case-005", "case-010"],
        "Contributor": "L. Moreau",
        "LastRevision": "2023-06-10",
    },
    {
        "Id": "topic-06",
        "Title": "Renal and Retroperitoneal Masses",
        "Category": "Genitourinary",
        "Overview": "A measurement-driven approach to solid and cystic renal "
                    "lesions across age groups.",
        "Discussion": "Enhancement thresholds and fat detection carry most of "
                      "the diagnostic weight; age reorders the differential "
                      "completely in children.",
        "Etiology": "Renal cell carcinoma in adults; Wilms tumor and "
                    "neuroblastoma in young children.",
        "Findings": "Post-contrast attenuation change, macroscopic fat, the "
                    "claw sign, and vessel displacement versus encasement.",
        "TreatmentOptions": "Partial or radical nephrectomy, ablation, or "
                            "active surveillance by size and histology.",
        "CaseRefs": ["case-006", "case-009", "case-012"],
        "Contributor": "R. Lindqvist",
        "LastRevision": "2023-06-25",
    },
]

QUESTIONS = {
    "case-001": [
        {"stem": "Which imaging feature most favors abscess over glioblastoma "
                 "in a ring-enhancing lesion?",
         "choices": ["Surrounding vasogenic edema",
                     "Central diffusion restriction",
                     "Midline shift",
                     "Irregular rim thickness"],
         "correct": 1,
         "explanation": "Pus restricts diffusion centrally; necrotic tumor "
                        "cores usually do not."},
        {"stem": "The thick irregular enhancing rim in this case most likely "
                 "represents what tissue?",
         "choices": ["Viable tumor margin", "Organized hematoma",
                     "Radiation necrosis", "Normal cortex"],
         "correct": 0},
    ],
    "case-003": [
        {"stem": "Which single finding is most specific for acute "
                 "appendicitis on contrast CT?",
         "choices": ["Free pelvic fluid",
                     "Appendiceal diameter of 7 mm",
                     "An appendicolith with periappendiceal stranding",
                     "Cecal wall thickening"],
         "correct": 2,
         "explanation": "A calcified appendicolith with adjacent stranding in "
                        "the right clinical setting is highly specific."},
    ],
    "case-005": [
        {"stem": "What defines the radiographic pleural line of a "
                 "pneumothorax?",
         "choices": ["The visceral pleural edge with absent markings beyond",
                     "A skin fold crossing the ribs",
                     "The azygoesophageal recess",
                     "A bulla wall"],
         "correct": 0,
         "explanation": "The visceral pleura becomes visible with no lung "
                        "markings peripheral to it."},
    ],
    "case-007": [
        {"stem": "Central restricted diffusion inside a smooth thin rim most "
                 "strongly suggests which diagnosis?",
         "choices": ["Glioblastoma", "Cerebral abscess", "Metastasis",
                     "Demyelinating lesion"],
         "correct": 1,
         "explanation": "Restricted pus inside a smooth capsule is the "
                        "classic abscess pattern."},
        {"stem": "Which history item in this case points toward a hematogenous "
                 "septic source?",
         "choices": ["Recent dental extraction", "Smoking history",
                     "Hypertension", "Long-haul travel"],
         "correct": 0},
    ],
    "case-009": [
        {"stem": "Macroscopic fat within an adnexal mass most strongly "
                 "suggests which lesion?",
         "choices": ["Endometrioma", "Mature cystic teratoma",
                     "Hemorrhagic cyst", "Tubo-ovarian abscess"],
         "correct": 1},
    ],
    "case-011": [
        {"stem": "Periventricular ovoid lesions oriented perpendicular to the "
                 "ventricles are typical of which process?",
         "choices": ["Small vessel ischemia", "Demyelination",
                     "Lymphoma", "Metastases"],
         "correct": 1,
         "explanation": "The perpendicular orientation reflects perivenular "
                        "demyelination."},
    ],
}

# img-09 is a byte-identical copy of img-01 (content dedup fixture)
PALETTE = [
    (26, 34, 56), (64, 28, 28), (24, 52, 38), (58, 48, 22),
    (40, 26, 58), (22, 50, 56), (52, 30, 48), (34, 40, 24),
]


def make_png(n: int) -> bytes:
    """Small deterministic PNG: tinted field with index-dependent shapes."""
    import io

    img = Image.new("RGB", (96, 72), PALETTE[(n - 1) % len(PALETTE)])
    d = ImageDraw.Draw(img)
    cx, cy = 20 + (n * 7) % 56, 16 + (n * 11) % 40
    r = 8 + (n * 5) % 14
    d.ellipse((cx - r, cy - r, cx + r, cy + r), outline=(220, 220, 220), width=2)
    d.rectangle((4 + n, 60, 40 + n, 66), fill=(150 + 8 * (n % 8), 140, 120))
    d.line((0, n * 6 % 72, 95, (n * 13) % 72), fill=(90, 110, 130), width=1)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def write_fixture(out: Path) -> None:
    for sub in ("cases", "topics", "questions", "images"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    index1 = {"cases": [{"id": c["Id"], "href": f"cases/{c['Id']}.json"}
                        for c in CASES[:8]],
              "next": "cases/index-2.json"}
    index2 = {"cases": [{"id": c["Id"], "href": f"cases/{c['Id']}.json"}
                        for c in CASES[8:]],
              "next": None}
    (out / "cases" / "index-1.json").write_text(
        json.dumps(index1, indent=2) + "\n", "utf-8")
    (out / "cases" / "index-2.json").write_text(
        json.dumps(index2, indent=2) + "\n", "utf-8")

    for case in CASES:
        body = dict(case)
        # keyword/reference lists ship as wrapped repeated elements
        body["Keywords"] = {"Keyword": case["Keywords"]}
        if "References" in case:
            body["References"] = {"Reference": case["References"]}
        (out / "cases" / f"{case['Id']}.json").write_text(
            json.dumps(body, indent=2) + "\n", "utf-8")
        questions = QUESTIONS.get(case["Id"], [])
        (out / "questions" / f"{case['Id']}.json").write_text(
            json.dumps({"questions": questions}, indent=2) + "\n", "utf-8")
    for topic in TOPICS:
        (out / "topics" / f"{topic['Id']}.json").write_text(
            json.dumps(topic, indent=2) + "\n", "utf-8")

    for n in range(1, 9):
        (out / "images" / f"img-{n:02d}.png").write_bytes(make_png(n))
    (out / "images" / "img-09.png").write_bytes(make_png(1))


def check(out: Path) -> None:
    from loforge.dsl import parse_script
    from loforge.model import Collection, validate_collection
    from loforge.ops import apply_script
    from loforge.importing import run_import

    c = Collection.empty("collection")
    c, report = run_import(c, "medpix", {"base": out.resolve().as_uri()})
    assert report.documents == 12, report
    assert report.linked_documents == 6, report
    assert not report.errors, report.errors
    assert validate_collection(c).ok
    n_types = c.schema.type_count()
    n_local = sum(1 for r in c.resources.values() if r.kind == "local-file")
    print(f"element types: {n_types}")
    print(f"documents: {len(c.documents)}  resources: {len(c.resources)} "
          f"({n_local} local)")
    assert n_types == 88, n_types
    assert n_local == 8, n_local          # 9 png files, one a byte-duplicate
    assert len(c.resources) == 17, len(c.resources)  # + 9 distinct protocol URLs

    script = parse_script((REPO / "fixtures" / "medpix_curation.cdsl").read_text("utf-8"))
    result = apply_script(c, script)
    assert result.ok, result.outcomes[-1]
    n_after = result.collection.schema.type_count()
    print(f"after curation: {n_after} element types")
    assert n_after == 33, n_after
    assert validate_collection(result.collection).ok
    print("fixture check passed")


def main() -> int:
    if "--check" in sys.argv:
        import tempfile

        with tempfile.TemporaryDirectory() as tmp:
            target = Path(tmp) / "medpix"
            write_fixture(target)
            check(target)
        return 0
    write_fixture(OUT)
    print(f"wrote fixture to {OUT}")
    check(OUT)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
